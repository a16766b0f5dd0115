"""Mining evolving package ecosystems: bug urgency ranking and developer
recommendation over temporal dependency graphs."""

__version__ = "0.1.0"
