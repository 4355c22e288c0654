"""pipetwin: a digital twin for GitLab CI/CD pipelines."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ExecutionStatus,
    Job,
    JobRun,
    Pipeline,
    PipelineRun,
    Trigger,
    TriggerType,
    WhenPolicy,
    compute_yaml_hash,
    needs_graph,
    validate,
)
from .parser import RawConfig, parse, parse_result  # noqa: F401
from .bpmn import BpmnDocument, generate  # noqa: F401
from .diff import StructuralDiff, diff, project  # noqa: F401
from .analytics import aggregate, categorize, delta, overlay  # noqa: F401
