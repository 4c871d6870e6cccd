from chainscale.controllers.BaseController import BaseController
from chainscale.controllers.DemandController import DemandController
from chainscale.controllers.BinPackController import BinPackController
from chainscale.controllers.PrePlanController import PrePlanController
from chainscale.controllers.SingleChainController import SingleChainController
from chainscale.controllers.MultiChainController import MultiChainController
from chainscale.controllers.OfflineController import OfflineController
from chainscale.controllers.TraceController import TraceController
from chainscale.controllers.ExperimentController import ExperimentController
from chainscale.controllers.ReportController import ReportController
