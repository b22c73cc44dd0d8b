# Copyright 2024 The momentnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

"""
momentnet
=========

Multi-moment connectedness networks of daily price panels and their
response to identified monetary policy shocks.

:meta private:
"""

from momentnet import linalg, random
from momentnet.config import VERSION as __version__
from momentnet.config import Moment, Regime, load_config
from momentnet.connectedness import (
    ConnectednessTable,
    connectedness_series,
    directional_indices,
    local_table,
    pairwise_indices,
    total_index,
)
from momentnet.damm import (
    MixtureState,
    MomentPanel,
    SdCoefficients,
    damm_fit,
    damm_step,
    extract_moment_panel,
    mixture_moments,
    modified_logistic,
    simplex_jacobian,
    simplex_map,
)
from momentnet.errors import *
from momentnet.localproj import (
    LpSpec,
    build_dummies,
    heat_indicator,
    lp_regress,
    robust_se,
    run_local_projections,
)
from momentnet.network import (
    MomentLayer,
    MultiLayerNetwork,
    bridge_centrality,
    build_network,
    export_network,
    layer_weights,
    project_layers,
)
from momentnet.shocks import (
    ShockSeries,
    aggregate_surprises,
    decompose_shocks,
    fit_restricted_bvar,
    identify_signs,
)
from momentnet.synth import (
    SynthConfig,
    gen_price_panel,
    gen_shock_dataset,
    write_dataset,
)
from momentnet.timeseries import (
    EventCalendar,
    PricePanel,
    ReturnPanel,
    SummaryStats,
    align_calendars,
    log_returns,
    summary_stats,
)
from momentnet.tvpvar import (
    TvpVarSpec,
    fit_tvpvar,
    gfevd,
    gfevd_path,
    kalman_step,
    select_lag,
    vma_expand,
)
