"""Seeded synthetic longitudinal clinical-note generation for Alzheimer's disease research.

The pipeline samples patient personas from prevalence tables, lays out ten
years of pre-diagnosis visits, assigns symptom keyword mentions to each note,
renders prompts for an LLM (or a deterministic mock), and annotates the
resulting notes sentence by sentence.
"""

__version__ = "0.1.0"

from .config import DistributionConfig, default_config, load_config, load_config_file  # noqa: E402
from .persona import Persona, sample_cohort, sample_persona  # noqa: E402
from .taxonomy import AnnotationCategory  # noqa: E402

__all__ = [
    "__version__",
    "AnnotationCategory",
    "DistributionConfig",
    "Persona",
    "default_config",
    "load_config",
    "load_config_file",
    "sample_cohort",
    "sample_persona",
]
