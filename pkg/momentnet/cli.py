#!/usr/bin/env python

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

"""Command line driver: one subcommand per pipeline stage.

Every stage reads its inputs from the configured data files or from
artifacts of earlier stages in the output directory, writes its own
artifacts there and updates ``run_manifest.json``.
"""

import argparse
import datetime
import logging
import os
import sys
from functools import reduce

import numpy as np
import pandas as pd
from packaging.version import Version

from momentnet import (
    connectedness,
    damm,
    localproj,
    network,
    shocks,
    synth,
    timeseries,
    tvpvar,
)
from momentnet.config import VERSION, ExitCode, Moment, load_config
from momentnet.errors import (
    AlignmentError,
    ConfigError,
    DataError,
    MomentNetError,
)
from momentnet.io import (
    ensure_dir,
    read_csv,
    read_json,
    sha256_file,
    write_csv,
    write_json,
)
from momentnet.runtime import runtime
from momentnet.utils import fallback, format_dates

logger = logging.getLogger(__name__)

STAGES = ("moments", "connect", "network", "shocks", "lp")
MANIFEST = "run_manifest.json"
MOMENT_LAYERS = (Moment.VOLATILITY, Moment.SKEWNESS, Moment.KURTOSIS)


class Stage(object):
    """Logs entry, exit, exception type and elapsed time of a stage and
    names the stage in errors raised inside it."""

    __slots__ = ["name", "begin_time"]

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        self.begin_time = datetime.datetime.now()
        logger.info("stage=%s status=enter", self.name)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        elapsed = datetime.datetime.now() - self.begin_time
        logger.info(
            "stage=%s status=exit exception=%s elapsed=%s",
            self.name,
            exc_type.__name__ if exc_type else None,
            elapsed,
        )
        if isinstance(exc_val, MomentNetError):
            exc_val.prefix(f"stage '{self.name}'")
        return False


class Run(object):
    """Output directory, configuration and manifest of one invocation."""

    __slots__ = ["config", "out", "layers", "stages", "artifacts", "_data"]

    def __init__(self, config, layers=None):
        self.config = config
        self.out = ensure_dir(config.output_dir)
        self.layers = layers or list(config.get("network.layers"))
        self.stages = []
        self.artifacts = {}
        self._data = False

    def path(self, *parts):
        return os.path.join(self.out, *parts)

    def record(self, *paths):
        for path in paths:
            rel = os.path.relpath(path, self.out).replace(os.sep, "/")
            self.artifacts[rel] = sha256_file(path)

    def input(self, name):
        if self.config.get("data.source") == "synthetic" and not self._data:
            self.generate()
        return self.config.input_path(name)

    def generate(self):
        settings = synth.SynthConfig.from_config(
            self.config.section("data")["synthetic"], self.config.seed
        )
        paths = synth.write_dataset(self.path("data"), settings)
        self.record(*paths.values())
        self._data = True

    def categories(self, names):
        mapping = self.config.get("data.categories")
        if not mapping and self.config.get("data.source") == "synthetic":
            mapping = synth.SynthConfig.from_config(
                self.config.get("data.synthetic"), self.config.seed
            ).categories
        if not mapping or any(name not in mapping for name in names):
            return None
        return tuple(mapping[name] for name in names)

    def write_manifest(self):
        path = self.path(MANIFEST)
        stages, artifacts = [], {}
        digest = self.config.digest()
        if os.path.exists(path):
            previous = read_json(path)
            same_release = (
                Version(previous.get("version", "0")).release
                == Version(VERSION).release
            )
            if previous.get("config_sha256") == digest and same_release:
                stages = previous.get("stages", [])
                artifacts = previous.get("artifacts", {})
        artifacts.update(self.artifacts)
        stages = [s for s in STAGES if s in set(stages) | set(self.stages)]
        manifest = {
            "version": str(Version(VERSION)),
            "config_sha256": digest,
            "seed": self.config.seed,
            "stages": stages,
            "artifacts": dict(sorted(artifacts.items())),
        }
        return write_json(manifest, path)


# Stages


def _returns(run):
    prices = timeseries.read_prices(run.input("prices"))
    return timeseries.log_returns(prices)


def _summary(run, panel, filename, adf_max_lag):
    stats = timeseries.summary_stats(panel, adf_max_lag)
    run.record(timeseries.write_summary(stats, run.path(filename)))


def cmd_moments(run):
    returns = _returns(run)
    adf_max_lag = run.config.get("timeseries.adf_max_lag")
    _summary(run, returns, "summary.csv", adf_max_lag)
    section = run.config.section("damm")
    panel, fits = damm.extract_moment_panel(
        returns,
        J=section["components"],
        config=section,
        seed=run.config.seed,
        vol_scale=section["vol_scale"],
        printed=section["printed_moments"],
    )
    run.record(write_csv(panel.to_frame(), run.path("moments.csv")))
    for fit in fits:
        path = run.path("fits", f"{fit.name}.json")
        run.record(write_json(fit.to_dict(), path))
    for moment in MOMENT_LAYERS:
        series = timeseries.ReturnPanel(
            panel.dates, panel.layer(moment.label), panel.names
        )
        filename = f"summary_{moment.label}.csv"
        try:
            _summary(run, series, filename, adf_max_lag)
        except MomentNetError as e:
            fallback(f"skipping {filename}: {e}", logger)


def _moment_panel(run):
    frame = read_csv(run.path("moments.csv"), stage="moments")
    return damm.MomentPanel.from_frame(
        frame, vol_scale=run.config.get("damm.vol_scale")
    )


def _layer_data(run, layer, panel):
    if Moment.from_label(layer) == Moment.RETURN:
        returns = _returns(run)
        frame = returns.to_frame().reindex(panel.dates)
        if frame.isna().any().any():
            raise DataError(
                "returns do not cover the dates of moments.csv; rerun the "
                "moments stage"
            )
        return frame[list(panel.names)].to_numpy(np.float64)
    return panel.layer(layer)


def cmd_connect(run):
    panel = _moment_panel(run)
    section = run.config.section("tvpvar")
    scaled = run.config.get("network.index_form")
    for layer in run.layers:
        data = _layer_data(run, layer, panel)
        p = section["lag"] or tvpvar.select_lag(data, section["p_max"])
        spec = tvpvar.TvpVarSpec.from_config(data.shape[1], section, p)
        path = tvpvar.fit_tvpvar(
            data, spec, dates=panel.dates, names=panel.names
        )
        shares = tvpvar.gfevd_path(path)
        run.record(
            tvpvar.write_gfevd(shares, run.path(f"gfevd_{layer}.csv")),
            write_json(path.diagnostics(), run.path(f"tvpvar_{layer}.json")),
        )
        table = connectedness.average_table(shares.d, panel.names, scaled)
        run.record(
            connectedness.write_table(table, run.path(f"table_{layer}.csv"))
        )
        series = connectedness.connectedness_series(
            shares.d, shares.dates, panel.names, scaled
        )
        run.record(*connectedness.write_series(series, layer, run.out))
        logger.info(
            "connect layer=%s p=%d total=%.4f", layer, p, table.total
        )


def _static_network(run, paths, names, categories):
    layers = [
        network.MomentLayer.from_decomposition(
            layer, d.mean(axis=0), names, categories
        )
        for layer, d in paths.items()
    ]
    if run.config.get("network.static_weights") == "average":
        return network.build_network(layers)
    weights, projected = network.project_path(paths)
    densities, _ = network.layer_weights(layers)
    projection = network.MomentLayer.from_decomposition(
        network.PROJECTION, projected.mean(axis=0), names, categories
    )
    return network.MultiLayerNetwork(
        tuple(layers), densities, weights.mean(axis=0), projection
    )


def _local_tables(run, table, names, categories):
    groups = {}
    for name, category in zip(names, categories):
        groups.setdefault(category, []).append(name)
    for receivers, r_names in groups.items():
        for senders, s_names in groups.items():
            block = connectedness.local_table(table, r_names, s_names)
            filename = f"local_{receivers}_{senders}.csv"
            run.record(connectedness.write_table(block, run.path(filename)))


def _layer_paths(run):
    """Decomposition paths of every layer on the dates all layers share.

    Layers filtered with different lag orders start on different dates.
    """
    shares = {}
    for layer in run.layers:
        shares[layer] = tvpvar.read_gfevd(run.path(f"gfevd_{layer}.csv"))
    names = next(iter(shares.values())).names
    for layer, table in shares.items():
        if table.names != names:
            raise DataError(f"gfevd_{layer}.csv has different series")
    dates = reduce(
        lambda a, b: a.intersection(b), [s.dates for s in shares.values()]
    ).sort_values()
    if len(dates) == 0:
        raise AlignmentError("layer decompositions share no dates")
    paths = {}
    for layer, table in shares.items():
        if len(table.dates) != len(dates):
            logger.info(
                "network layer=%s dates=%d aligned=%d",
                layer,
                len(table.dates),
                len(dates),
            )
        paths[layer] = table.d[table.dates.get_indexer(dates)]
    return paths, dates, names


def cmd_network(run):
    scaled = run.config.get("network.index_form")
    paths, dates, names = _layer_paths(run)
    categories = run.categories(names)
    static = _static_network(run, paths, names, categories)
    metrics = {}
    for layer in static.layers + (static.projection,):
        metrics[layer.name] = network.node_metrics(layer.table(scaled), layer)
    run.record(
        network.export_network(static, metrics, run.path("network.json"))
    )
    table = static.projection.table(scaled)
    run.record(
        connectedness.write_table(
            table, run.path(f"table_{network.PROJECTION}.csv")
        )
    )
    if categories is not None:
        _local_tables(run, table, names, categories)
    weights, projected = network.project_path(paths)
    frame = pd.DataFrame(weights, columns=list(paths))
    frame.insert(0, "date", format_dates(dates))
    run.record(write_csv(frame, run.path("layer_weights.csv")))
    series = connectedness.connectedness_series(
        projected, dates, names, scaled
    )
    run.record(
        *connectedness.write_series(series, network.PROJECTION, run.out)
    )


def cmd_shocks(run):
    section = run.config.section("shocks")
    macro = shocks.read_macro(run.input("macro"))
    meetings = shocks.read_surprises(run.input("surprises"))
    surprises = shocks.aggregate_surprises(meetings, macro.months)
    surprises, macro = macro.aligned(surprises)
    draws = shocks.fit_restricted_bvar(
        surprises.values,
        macro.values,
        p=section["lags"],
        draws=section["draws"],
        seed=run.config.seed,
        prior_scale=section["prior_scale"],
        prior_precision=section["prior_precision"],
    )
    identified = shocks.identify_signs(
        draws, angles=section["angles"], seed=run.config.seed
    )
    series = shocks.decompose_shocks(
        identified,
        surprises.values,
        surprises.months,
        min_accepted=section["min_accepted"],
    )
    run.record(shocks.write_shocks(series, run.path("shocks.csv")))


def _indices(run):
    """Daily indices to project: the projection and layer totals and the
    net index of every node in the projection layer."""
    indices = {}
    for layer in (network.PROJECTION,) + tuple(run.layers):
        stage = "network" if layer == network.PROJECTION else "connect"
        indices[layer] = connectedness.read_total_index(
            run.path(f"total_index_{layer}.csv"), stage=stage
        )
    nets = connectedness.read_net_index(
        run.path(f"net_index_{network.PROJECTION}.csv"), stage="network"
    )
    for node in nets.columns:
        indices[f"net_{node}"] = nets[node]
    return indices


def cmd_lp(run):
    section = run.config.section("lp")
    spec = localproj.LpSpec(
        h_max=section["h_max"],
        bands=tuple(section["bands"]),
        aggregation=section["aggregation"],
    )
    series = shocks.read_shocks(run.path("shocks.csv"))
    events = timeseries.read_events(run.input("events"))
    controls = localproj.macro_controls(shocks.read_macro(run.input("macro")))
    dummies = localproj.build_dummies(events, series)
    run.record(localproj.write_dummies(dummies, run.path("dummies.csv")))
    results = {}
    for name, daily in _indices(run).items():
        index = localproj.monthly(daily, spec.aggregation)
        results[name] = localproj.run_local_projections(
            index, series, dummies, controls, spec, name
        )
        path = run.path(f"lp_{name}.csv")
        run.record(localproj.write_lp(results[name], path))
    run.record(localproj.write_heat(results, run.path("heat.csv")))


COMMANDS = {
    "moments": cmd_moments,
    "connect": cmd_connect,
    "network": cmd_network,
    "shocks": cmd_shocks,
    "lp": cmd_lp,
}


def _has_shock_inputs(run):
    if run.config.get("data.source") == "synthetic":
        return True
    return all(
        os.path.exists(run.config.input_path(name))
        for name in ("surprises", "macro", "events")
    )


def cmd_pipeline(run):
    stages = list(STAGES)
    if not _has_shock_inputs(run):
        logger.info("pipeline shock inputs missing, skipping shocks and lp")
        stages = stages[:3]
    for name in stages:
        _run_stage(run, name)


def _run_stage(run, name):
    with Stage(name):
        COMMANDS[name](run)
    run.stages.append(name)
    run.write_manifest()


# Argument parsing


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", help="JSON run configuration", default=None
    )
    common.add_argument("--seed", type=int, help="root random seed")
    common.add_argument("--out", help="output directory")
    common.add_argument(
        "--layer",
        action="append",
        help="moment layer to process (repeatable)",
    )
    common.add_argument("--threads", type=int, help="worker count")
    common.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging"
    )
    common.add_argument(
        "overrides",
        nargs="*",
        metavar="section.key=value",
        help="configuration overrides",
    )
    parser = argparse.ArgumentParser(
        prog="momentnet",
        description="Multi-moment connectedness networks and monetary "
        "policy shocks.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {VERSION}"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("pipeline",):
        commands.add_parser(name, parents=[common])
    return parser


def _overrides(args):
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if args.out is not None:
        overrides.append(f"output.dir={os.path.abspath(args.out)}")
    return overrides


def _layers(requested):
    if not requested:
        return None
    for layer in requested:
        try:
            Moment.from_label(layer)
        except KeyError as e:
            raise ConfigError(str(e.args[0]), field="--layer")
    return list(requested)


def main(argv=None):
    args = _parser().parse_args(argv)
    runtime.setup_logging(verbose=args.verbose)
    try:
        config = load_config(
            args.config,
            _overrides(args),
            check_files=args.command in ("moments", "pipeline"),
        )
        runtime.configure(seed=config.seed, threads=config.threads)
        run = Run(config, _layers(args.layer))
        logger.info(
            "run command=%s config=%s seed=%d out=%s",
            args.command,
            config.digest()[:12],
            config.seed,
            run.out,
        )
        if args.command == "pipeline":
            cmd_pipeline(run)
        else:
            _run_stage(run, args.command)
    except MomentNetError as e:
        logger.error("%s: %s", type(e).__name__, e)
        print(f"momentnet: error: {e}", file=sys.stderr)
        return int(e.exit_code)
    finally:
        runtime.destroy()
    return int(ExitCode.SUCCESS)


if __name__ == "__main__":
    sys.exit(main())
