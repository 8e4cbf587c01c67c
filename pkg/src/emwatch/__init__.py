"""emwatch: recall-first human emergency detection over body-keypoint + depth streams."""

__version__ = "0.1.0"
