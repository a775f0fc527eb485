"""Result rows and their CSV / JSON renderings.

Data files carry only what the seed determines; wall time goes to the
``<out>.meta.json`` sidecar and to the run record.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from rest_framework.renderers import JSONRenderer

from montecarlo.accumulators import EstimateCI
from .config import echo_value
from .serializers import RunSummarySerializer

COLUMNS = ['label', 'alpha', 'estimator', 'mean', 'stderr', 'n', 'target']


def _finite(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class EstimateRow:
    label: str
    estimator: str
    value: EstimateCI | float
    alpha: float | None = None
    target: float | None = None

    @property
    def mean(self) -> float:
        return self.value.mean if isinstance(self.value, EstimateCI) else float(self.value)

    @property
    def stderr(self) -> float | None:
        return self.value.stderr if isinstance(self.value, EstimateCI) else None

    @property
    def n(self) -> int | None:
        return self.value.n if isinstance(self.value, EstimateCI) else None

    def as_dict(self) -> dict:
        return {
            'label': self.label,
            'alpha': _finite(self.alpha),
            'estimator': self.estimator,
            'mean': _finite(self.mean),
            'stderr': _finite(self.stderr),
            'n': self.n,
            'target': _finite(self.target),
        }


@dataclass
class LabResult:
    rows: list = field(default_factory=list)
    passed: bool = True
    summary: str = ''

    def add(self, label, estimator, value, alpha=None, target=None) -> EstimateRow:
        row = EstimateRow(label, estimator, value, alpha, target)
        self.rows.append(row)
        return row


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return value


def render_csv(command, version, config, result: LabResult) -> str:
    buffer = io.StringIO()
    buffer.write(f'# command={command}\n# version={version}\n')
    for key, value in sorted(config.items()):
        if key in ('out', 'format'):
            continue
        buffer.write(f'# {key}={echo_value(value)}\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(COLUMNS)
    for row in result.rows:
        data = row.as_dict()
        writer.writerow([_cell(data[column]) for column in COLUMNS])
    return buffer.getvalue()


def render_json(command, version, config, result: LabResult) -> str:
    payload = RunSummarySerializer({
        'command': command,
        'version': version,
        'seed': config['seed'],
        'config': {key: echo_value(value) for key, value in sorted(config.items()) if key not in ('out', 'format')},
        'passed': result.passed,
        'summary': result.summary,
        'estimates': [row.as_dict() for row in result.rows],
    }).data
    return JSONRenderer().render(payload, renderer_context={'indent': 2}).decode() + '\n'


def write_output(path, text) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def write_sidecar(path, wall_time, run_id=None) -> Path:
    sidecar = Path(f'{path}.meta.json')
    sidecar.write_text(json.dumps({'wall_time': wall_time, 'run_id': run_id}, indent=2) + '\n')
    return sidecar
