"""Shared wall-time accounting for the desk-scale acceptance chain."""

import time

TIMINGS: dict = {}


class timed:
    def __init__(self, key):
        self.key = key

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        TIMINGS[self.key] = (TIMINGS.get(self.key, 0.0)
                             + time.perf_counter() - self.t0)
