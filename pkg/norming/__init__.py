import logging

import sentry_sdk

from norming.libs import config

WELCOME = """
[bold]Norming CLI[/bold] - Remez constants and smooth rigidity
"""


def init_app(verbose: bool = False):
    """
    Setup the app
    """
    cfg = config.AppConfig.instance()
    logging.basicConfig(
        format="%(asctime)s %(levelname)8s %(filename)15s: %(message)s",
        level=logging.DEBUG if verbose else cfg.numeric_log_level,
    )

    if cfg.sentry_dsn:
        sentry_sdk.init(
            dsn=cfg.sentry_dsn,
            traces_sample_rate=cfg.sentry_traces_sample_rate,
        )
