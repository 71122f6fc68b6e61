"""Abstract Language Objects: an executable object model around LLM prompts.

The package turns the create/interact/simulate workflow into code: prompt
templates render the creation and interaction requests, a parser lifts
model responses into a validated ALO registry, a deterministic tick engine
executes the objects in a bounded 3D world, a code generator emits portable
scene bundles for the browser harness, and the variability lab quantifies
response spread with cosine-similarity matrices.
"""

from .model import (  # noqa: F401
    ALO,
    Condition,
    ManagerObject,
    PolicyRule,
    SkillSpec,
    StateVariable,
    StepObject,
    SubObject,
    ValidationReport,
    Violation,
    new_alo,
    validate,
)
from .registry import Registry, load, registry_get, registry_put, save  # noqa: F401

__version__ = "0.1.0"
