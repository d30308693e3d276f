"""dpopt: bitwidth-aware datapath optimization over e-graphs.

Designs are width-annotated bitvector dataflow DAGs. The optimizer grows an
e-graph by applying width-conditional rewrites to saturation or resource
limits, then extracts a minimum-area implementation with a greedy or ILP
backend, proving input/output equivalence by simulation.
"""

from .benchmarks import REGISTRY, benchmark
from .cost import CostConfig, NodeCostQuery, csd_digits, dag_cost, design_cost, op_cost
from .egraph import (AnalysisConflictError, EClass, EGraph, ENode, NodeLimitError,
                     RunLimits, RunReport, WidthMismatchError, run_saturation)
from .extract import (IlpModel, Selection, build_ilp, export_lp, extract_greedy,
                      selection_to_design, solve_ilp)
from .ir import Design, Env, Expr, OpKind, const, eval_design, eval_expr, make_design, node, var
from .netlist import emit_netlist
from .patterns import ematch
from .pipeline import (RunArtifacts, RunConfig, SweepSpec, architecture_fingerprint,
                       artifacts_json, run_pipeline, run_sweep)
from .rules import (RewriteRule, catalog_json, check_condition, default_rule_classes,
                    instantiate_rhs, rule_table, select_rules, synthesize_free_widths)
from .sexpr import DesignParseError, parse_design, print_design
from .verify import (EquivVerdict, RuleCheckReport, check_rule_soundness, equiv_exhaustive,
                     equiv_sampled)

__version__ = "0.1.0"
