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

"""Spillover indices computed from normalized variance decompositions.

Matrices are indexed ``d[i, j]`` with receivers ``i`` in rows and
senders ``j`` in columns. Computation is in fractions; tables and
indices are reported in percent.
"""

import logging
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from momentnet.io import read_csv, write_csv
from momentnet.utils import format_dates

logger = logging.getLogger(__name__)

TO_ROW = "To others"
NET_ROW = "Net"
FROM_COLUMN = "From others"


def _off_diagonal(d):
    d = np.asarray(d, dtype=np.float64)
    return d - np.diag(np.diag(d))


def pairwise_indices(d):
    """Net ``d_ij - d_ji`` and total ``d_ij + d_ji`` pairwise
    connectedness."""
    d = np.asarray(d, dtype=np.float64)
    return d - d.T, d + d.T


def total_index(d):
    d = np.asarray(d, dtype=np.float64)
    return 100.0 * _off_diagonal(d).sum() / d.shape[0]


def directional_indices(d, scaled=False):
    """To, From, Net and Total connectedness per node in percent.

    ``scaled`` divides To and From by ``N``, the index form; the default
    is the plain row and column sums.
    """
    off = _off_diagonal(d)
    to = 100.0 * off.sum(axis=0)
    from_ = 100.0 * off.sum(axis=1)
    if scaled:
        to, from_ = to / off.shape[0], from_ / off.shape[0]
    return to, from_, to - from_, to + from_


@dataclass(frozen=True)
class ConnectednessTable:
    """Static connectedness table; ``rows`` receive from ``columns``.

    Square tables exclude the diagonal from the margins. Cross tables
    between disjoint node sets sum whole rows and columns and carry no
    Net row.
    """

    rows: tuple
    columns: tuple
    matrix: np.ndarray
    to: np.ndarray
    from_: np.ndarray
    net: np.ndarray
    total: float
    scaled: bool = False

    @property
    def names(self):
        return self.rows

    @property
    def square(self):
        return self.rows == self.columns

    @classmethod
    def from_matrix(cls, d, names, scaled=False):
        d = np.asarray(d, dtype=np.float64)
        names = tuple(names)
        if d.shape != (len(names), len(names)):
            raise ValueError(
                f"matrix of shape {d.shape} does not match {len(names)} names"
            )
        to, from_, net, _ = directional_indices(d, scaled=scaled)
        return cls(
            names, names, d, to, from_, net, float(np.mean(from_)), scaled
        )

    @classmethod
    def cross(cls, d, rows, columns):
        d = np.asarray(d, dtype=np.float64)
        from_ = 100.0 * d.sum(axis=1)
        to = 100.0 * d.sum(axis=0)
        return cls(
            tuple(rows),
            tuple(columns),
            d,
            to,
            from_,
            None,
            float(np.mean(from_)),
        )

    def to_frame(self):
        """Report layout: pairwise block in percent, a From column,
        then To and Net rows. The To row's From cell holds the total."""
        frame = pd.DataFrame(
            100.0 * self.matrix, index=list(self.rows), columns=self.columns
        )
        frame[FROM_COLUMN] = self.from_
        frame.loc[TO_ROW] = list(self.to) + [self.total]
        if self.net is not None:
            frame.loc[NET_ROW] = list(self.net) + [np.nan]
        frame.index.name = "receiver"
        return frame


def local_table(table, receivers, senders=None):
    """Sub-block of ``table`` without renormalization.

    With ``senders`` omitted (or equal to ``receivers``) the block is
    square and margins exclude the diagonal; otherwise the block holds
    the spillovers from ``senders`` to ``receivers``.
    """
    receivers = tuple(receivers)
    senders = receivers if senders is None else tuple(senders)
    if not receivers or not senders:
        raise ValueError("local table needs at least one node")
    position = {name: i for i, name in enumerate(table.rows)}
    for name in receivers + senders:
        if name not in position:
            raise KeyError(f"unknown node '{name}'")
    rows = [position[n] for n in receivers]
    cols = [position[n] for n in senders]
    block = table.matrix[np.ix_(rows, cols)]
    if senders == receivers:
        return ConnectednessTable.from_matrix(
            block, receivers, scaled=table.scaled
        )
    if set(senders) & set(receivers):
        raise ValueError("cross tables need disjoint node sets")
    return ConnectednessTable.cross(block, receivers, senders)


def average_table(d_path, names, scaled=False):
    d_path = np.asarray(d_path, dtype=np.float64)
    if d_path.ndim == 2:
        d_path = d_path[None]
    if d_path.shape[0] < 1:
        raise ValueError("average_table needs at least one date")
    return ConnectednessTable.from_matrix(
        d_path.mean(axis=0), names, scaled=scaled
    )


@dataclass(frozen=True)
class ConnectednessSeries:
    dates: pd.Index
    names: tuple
    total: np.ndarray
    to: np.ndarray
    from_: np.ndarray
    net: np.ndarray
    gross: np.ndarray

    def total_frame(self):
        return pd.DataFrame(
            {"date": format_dates(self.dates), "total": self.total}
        )

    def net_frame(self):
        T, N = self.net.shape
        return pd.DataFrame(
            {
                "date": np.repeat(format_dates(self.dates), N),
                "node": np.tile(np.asarray(self.names, dtype=object), T),
                "net": self.net.ravel(),
            }
        )


def connectedness_series(d_path, dates, names, scaled=False):
    d_path = np.asarray(d_path, dtype=np.float64)
    N = d_path.shape[-1]
    off = d_path * (1.0 - np.eye(N))[None]
    to = 100.0 * off.sum(axis=1)
    from_ = 100.0 * off.sum(axis=2)
    if scaled:
        to, from_ = to / N, from_ / N
    total = 100.0 * off.sum(axis=(1, 2)) / N
    return ConnectednessSeries(
        dates, tuple(names), total, to, from_, to - from_, to + from_
    )


def write_table(table, path):
    return write_csv(table.to_frame().round(2), path, index=True)


def write_series(series, layer, out_dir):
    total = write_csv(
        series.total_frame(), os.path.join(out_dir, f"total_index_{layer}.csv")
    )
    net = write_csv(
        series.net_frame(), os.path.join(out_dir, f"net_index_{layer}.csv")
    )
    logger.debug("wrote layer=%s indices", layer)
    return total, net


def read_total_index(path, stage="connect"):
    frame = read_csv(path, stage=stage)
    return pd.Series(
        frame["total"].to_numpy(np.float64),
        index=pd.DatetimeIndex(pd.to_datetime(frame["date"])),
        name="total",
    )


def read_net_index(path, stage="connect"):
    """Wide ``date x node`` frame of net indices."""
    frame = read_csv(path, stage=stage)
    frame["date"] = pd.to_datetime(frame["date"])
    wide = frame.pivot(index="date", columns="node", values="net")
    return wide[list(pd.unique(frame["node"]))]
