from chainscale.models.Base import Base
from chainscale.models.VnfType import VnfType, as_fraction
from chainscale.models.ServiceChain import ServiceChain
from chainscale.models.Cluster import Cluster
from chainscale.models.Scenario import Scenario
from chainscale.models.TraceSeries import TraceSeries
from chainscale.models.Placement import Placement, DemandVector
from chainscale.models.CostReport import CostReport
from chainscale.models.Pattern import Pattern, Packing
from chainscale.models.PrePlan import PrePlan, ServerMultiset
from chainscale.models.InstanceRecord import InstanceRecord, InstanceState
from chainscale.models.Experiment import ExperimentSpec, RunResult, SyntheticTraceParams, ViolationEvent, ALGORITHMS
from chainscale.models.RunRecord import RunRecord
