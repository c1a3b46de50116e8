"""SDN-managed AAA routing: configuration model, controller and simulator.

Functions taking documents or scenarios accept either JSON text or a
JSON-compatible dict, and return decoded Python values.
"""

import json

from . import _core

Error = _core.Error
Error.code = property(lambda self: self.args[0])

__all__ = [
    "Error",
    "Simulation",
    "canonical_document",
    "match_realm",
    "next_hops",
    "normalize_scenario",
    "parse_nai",
    "random_scenario",
    "redact_document",
    "run",
    "validate_document",
]


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


def parse_nai(text):
    """Return (user, realm) for a user@realm identifier."""
    return _core.parse_nai(text)


def match_realm(pattern, realm):
    """Specificity of `pattern` for `realm`, or None when it does not match."""
    return _core.match_realm(pattern, realm)


def validate_document(doc):
    return json.loads(_core.validate_document(_text(doc)))


def canonical_document(doc):
    return _core.canonical_document(_text(doc))


def redact_document(doc):
    return json.loads(_core.redact_document(_text(doc)))


def normalize_scenario(scenario):
    return json.loads(_core.normalize_scenario(_text(scenario)))


def random_scenario(seed, n_nodes=8, edge_prob=0.5, requests=10, mode="proactive", security="psk"):
    return json.loads(_core.random_scenario(seed, n_nodes, edge_prob, requests, mode, security))


def next_hops(scenario, target):
    return _core.next_hops(_text(scenario), target)


def run(scenario, mode=None, seed=None):
    """Run a scenario to its stop time; returns (metrics, transcript lines, outcomes)."""
    metrics, transcript, outcomes = _core.run(_text(scenario), mode, seed)
    lines = [json.loads(line) for line in transcript.splitlines() if line]
    return json.loads(metrics), lines, json.loads(outcomes)


class Simulation:
    """Step-by-step control over one simulated network."""

    def __init__(self, scenario):
        self._sim = _core.Simulation(_text(scenario))

    def start(self):
        self._sim.start()

    def run_until(self, time):
        self._sim.run_until(time)

    @property
    def now(self):
        return self._sim.now

    def inject(self, node, nai, password):
        return self._sim.inject(node, nai, password)

    def node_down(self, node):
        self._sim.node_down(node)

    def node_up(self, node):
        self._sim.node_up(node)

    def get_config(self, node):
        """Running configuration as seen over the management channel (redacted)."""
        return json.loads(self._sim.get_config(node))

    def controller_snapshot(self):
        return json.loads(self._sim.controller_snapshot())

    def metrics(self):
        return json.loads(self._sim.metrics())

    def transcript(self):
        return [json.loads(line) for line in self._sim.transcript().splitlines() if line]

    def outcomes(self):
        return json.loads(self._sim.outcomes())

    def established_channels(self):
        return sorted(self._sim.established_channels())
