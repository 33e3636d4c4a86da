"""visact: decide whether actions mentioned in a video transcript are visible.

The package mirrors the corpus pipeline end to end: transcript ingestion
and density filtering, candidate-action chunking, miniclip segmentation
with motion filtering, crowd annotation with agreement statistics, feature
construction, text / video / multimodal classifiers, and evaluation.
"""

from . import (
    annotation,
    baselines,
    chunking,
    evaluation,
    features,
    miniclips,
    nn,
    synthetic,
    transcripts,
)

__version__ = "0.1.0"

__all__ = [
    "annotation",
    "baselines",
    "chunking",
    "evaluation",
    "features",
    "miniclips",
    "nn",
    "synthetic",
    "transcripts",
    "__version__",
]
