"""Configuration, branch enumeration, batch runs, reports and the command line."""

from .branches import BranchLeaf, BranchTree, enumerate_branches
from .config import RunConfig, parse_config
from .report import Report, emit_report
from .runner import enumerate_config, execute, run_sessions
