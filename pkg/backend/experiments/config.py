"""Run configuration sources: ``key=value`` files, GWER_SEED and command flags.

Precedence is flag > GWER_SEED > file > settings default. A CSV written by
any lab command starts with its configuration as ``# key=value`` lines, so it
can be fed back with ``--config`` to repeat the run.
"""
from __future__ import annotations

import io
import os
from pathlib import Path

from django.core.exceptions import ValidationError
from dotenv import dotenv_values

SEED_VARIABLE = 'GWER_SEED'
ECHO_PREFIX = '# '


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f'Config file {path} does not exist.', code='missing_config')
    lines = path.read_text().splitlines()
    if lines and lines[0].startswith(ECHO_PREFIX):
        lines = [line[len(ECHO_PREFIX):] for line in lines if line.startswith(ECHO_PREFIX)]
    values = dotenv_values(stream=io.StringIO('\n'.join(lines)))
    return {key.strip().lower().replace('-', '_'): value for key, value in values.items() if value not in (None, '')}


def merge_config(file_values: dict, flags: dict, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    merged = dict(file_values)
    if environ.get(SEED_VARIABLE):
        merged['seed'] = environ[SEED_VARIABLE]
    merged.update({key: value for key, value in flags.items() if value is not None})
    return merged


def echo_value(value) -> str:
    """Render a validated value the way a config file spells it."""
    if isinstance(value, (list, tuple)):
        return ','.join(echo_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return str(value)
