"""gradweaver: multi-task training with pluggable gradient-combination
strategies and history-driven direction correction."""

__version__ = "0.1.0"
