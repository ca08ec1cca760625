# Gunicorn configuration for the results API
import os

from kgtx.config import LOGGING

bind = os.getenv("KGTX_BIND", "0.0.0.0:5000")
workers = int(os.getenv("KGTX_WEB_WORKERS", 1))
worker_class = "sync"
# large coefficient tables take a few seconds
timeout = 120
accesslog = "-"
errorlog = "-"
capture_output = True

# Security settings
forwarded_allow_ips = "*"
proxy_allow_ips = "*"

# Same stderr handler and format as the CLI
logconfig_dict = LOGGING
