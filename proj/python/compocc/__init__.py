"""Compositional part models with occlusion-aware inference."""

import json

from ._compocc import *  # noqa: F401,F403
from ._compocc import EvalReport, Model

__version__ = "0.1.0"


def report_dict(report: EvalReport) -> dict:
    return json.loads(report.to_json())


def model_dict(model: Model) -> dict:
    return json.loads(model.to_json())
