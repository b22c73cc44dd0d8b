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

import logging
import sys
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


class Runtime(object):
    __slots__ = [
        "destroyed",
        "force_serial",
        "log_handler",
        "seed",
        "threads",
    ]

    def __init__(self):
        self.seed = 0
        self.threads = 1
        self.log_handler = None
        self.destroyed = False
        self._parse_command_args()

    def _parse_command_args(self):
        try:
            # Prune it out so the application does not see it
            sys.argv.remove("-momentnet:serial")
            self.force_serial = True
        except ValueError:
            self.force_serial = False

    def configure(self, seed=None, threads=None):
        if seed is not None:
            self.seed = int(seed)
        if threads is not None:
            if threads < 1:
                raise ValueError("threads must be at least 1")
            self.threads = int(threads)
        logger.debug("runtime seed=%d threads=%d", self.seed, self.threads)

    def setup_logging(self, verbose=False, stream=None):
        """Install the single stream handler used by the command line."""
        root = logging.getLogger("momentnet")
        if self.log_handler is not None:
            root.removeHandler(self.log_handler)
        self.log_handler = logging.StreamHandler(stream or sys.stderr)
        self.log_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(self.log_handler)
        root.setLevel(logging.DEBUG if verbose else logging.INFO)
        self.destroyed = False

    @property
    def parallel(self):
        return self.threads > 1 and not self.force_serial

    def map(self, fn, items, kind="process"):
        """Apply ``fn`` to every item, keeping input order.

        ``kind`` selects a process pool (``fn`` must be picklable) or a
        thread pool for work that releases the GIL in numpy.
        """
        items = list(items)
        if not self.parallel or len(items) <= 1:
            return [fn(item) for item in items]
        workers = min(self.threads, len(items))
        if kind == "process":
            pool = ProcessPoolExecutor(max_workers=workers)
        elif kind == "thread":
            pool = ThreadPoolExecutor(max_workers=workers)
        else:
            raise ValueError(f"unknown pool kind '{kind}'")
        logger.debug(
            "map items=%d workers=%d kind=%s", len(items), workers, kind
        )
        with pool:
            return list(pool.map(fn, items))

    def destroy(self):
        assert not self.destroyed
        if self.log_handler is not None:
            logging.getLogger("momentnet").removeHandler(self.log_handler)
            self.log_handler = None
        self.destroyed = True


runtime = Runtime()
