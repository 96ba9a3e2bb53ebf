import logging
import sys
from datetime import datetime, timezone

import config


class Logger:
    _logger = None

    @classmethod
    def get_logger(
        cls,
        name="ruin",
        es_url=f"{config.LOG_ELASTICSEARCH_PROTOCOL}://{config.LOG_ELASTICSEARCH_HOST}:{config.LOG_ELASTICSEARCH_PORT}",
        index=config.LOG_ELASTICSEARCH_INDEX_LOG,
        level=config.LOG_LEVEL,
    ):
        if cls._logger:
            return cls._logger
        logger = logging.getLogger(name)
        logger.setLevel(level)
        if not logger.handlers:
            # stdout carries CSV, so the console handler writes to stderr
            stream = logging.StreamHandler(sys.stderr)
            stream.setFormatter(
                logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
            )
            logger.addHandler(stream)
            if config.LOG_ELASTICSEARCH_ENABLED:
                logger.addHandler(cls._es_handler(es_url, index))
        cls._logger = logger
        return logger

    @staticmethod
    def _es_handler(es_url, index):
        from elasticsearch import Elasticsearch

        es = Elasticsearch(es_url)

        class ESHandler(logging.Handler):
            def emit(self, record):
                try:
                    es.index(
                        index=index,
                        document={
                            "timestamp": datetime.now(timezone.utc).isoformat(),
                            "level": record.levelname,
                            "logger": record.name,
                            "message": record.getMessage(),
                        },
                    )
                except Exception as e:
                    print(f"ES log failed: {e}", file=sys.stderr)

        return ESHandler()
