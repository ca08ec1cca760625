from datetime import datetime
import math
import time

import pytz
from dateutil import parser as dateutil_parser
from dateutil.relativedelta import relativedelta


def utc_now():
    return datetime.now(pytz.UTC)


def parse_timestamp(value):
    dt = dateutil_parser.isoparse(value)
    if dt.tzinfo is None:
        dt = pytz.UTC.localize(dt)
    return dt


def format_duration(started_at, ended_at=None):
    """Return a human-readable duration string between two ISO timestamps."""
    try:
        start = parse_timestamp(started_at)
        end = parse_timestamp(ended_at) if ended_at else utc_now()
        rd = relativedelta(end, start)
        parts = []
        if rd.days > 0:
            parts.append(f"{rd.days} {'day' if rd.days == 1 else 'days'}")
        if rd.hours > 0:
            parts.append(f"{rd.hours} {'hour' if rd.hours == 1 else 'hours'}")
        if rd.minutes > 0:
            parts.append(f"{rd.minutes} {'minute' if rd.minutes == 1 else 'minutes'}")
        if not parts and rd.seconds > 0:
            parts.append(f"{rd.seconds} {'second' if rd.seconds == 1 else 'seconds'}")
        return ', '.join(parts) if parts else 'less than a second'
    except (ValueError, TypeError):
        return 'unknown'


def format_datetime(value):
    try:
        dt = parse_timestamp(value) if isinstance(value, str) else value
        local_dt = dt.astimezone()
        tz_abbr = time.strftime('%Z')
        return local_dt.strftime(f'%-I:%M %p, %b %-d ({tz_abbr})')
    except (ValueError, TypeError):
        return str(value)


def format_float(value):
    """17 significant digits; -0 prints as 0."""
    value = float(value) + 0.0
    if math.isnan(value):
        return 'nan'
    return '%.17g' % value
