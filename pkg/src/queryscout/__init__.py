"""queryscout: learned ranking of executable debugging queries.

Given a natural-language user report and system logs from a faulty run,
rank the debugging queries most likely to highlight the root cause, and
execute them against the logs.
"""

__version__ = "0.1.0"
