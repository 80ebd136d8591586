import logging
import sys
import os
from logging.handlers import RotatingFileHandler

try:
    from pythonjsonlogger.json import JsonFormatter
except ImportError:  # python-json-logger < 3
    from pythonjsonlogger.jsonlogger import JsonFormatter

from app.config import config

TEXT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _formatter() -> logging.Formatter:
    if config.LOG_FORMAT == 'json':
        return JsonFormatter('%(asctime)s %(name)s %(levelname)s %(message)s')
    return logging.Formatter(TEXT_FORMAT)


logger = logging.getLogger("fujita_lab")
logger.setLevel(config.LOG_LEVEL)

# Remove all handlers first (avoid duplicate logs)
for handler in logger.handlers[:]:
    logger.removeHandler(handler)

# stdout carries CLI JSON documents, so the console handler writes to stderr
console_handler = logging.StreamHandler(sys.stderr)
console_handler.setLevel(config.LOG_LEVEL)
console_handler.setFormatter(_formatter())
if hasattr(console_handler.stream, 'reconfigure'):
    console_handler.stream.reconfigure(encoding='utf-8')

logger.addHandler(console_handler)

if config.LOG_FILE_ENABLED:
    if not os.path.exists(config.LOG_DIR):
        os.makedirs(config.LOG_DIR)

    # Configure log rotation
    log_file = os.path.join(config.LOG_DIR, "fujita_lab.log")
    MAX_BYTES = 10 * 1024 * 1024  # 10MB per file
    BACKUP_COUNT = 5  # Keep 5 backup files

    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=MAX_BYTES,
        backupCount=BACKUP_COUNT,
        encoding='utf-8'
    )
    file_handler.setLevel(config.LOG_LEVEL)
    file_handler.setFormatter(_formatter())
    logger.addHandler(file_handler)


def log_run_event(run: str, event: str, details: str = ""):
    """Log a solver lifecycle event"""
    logger.info(f"Run: {run} | Event: {event} | Details: {details}")


def log_check(check: str, passed: bool, details: str = ""):
    """Log the verdict of an invariant or inequality check"""
    if passed:
        logger.info(f"Check: {check} | Passed | {details}")
    else:
        logger.warning(f"Check: {check} | FAILED | {details}")


def log_api_call(endpoint: str, method: str, status_code: int = None):
    """Log API calls"""
    log_message = f"API Call: {method} {endpoint}"
    if status_code:
        log_message += f" | Status: {status_code}"
    logger.info(log_message)
