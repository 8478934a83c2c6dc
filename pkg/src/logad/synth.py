"""Synthetic labeled log corpora for tests, demos and benchmarks.

Normal lines are drawn from a fixed set of message templates whose only
variable part is a numeric slot, so after normalization each template
collapses to exactly one token sequence.  Anomalies come in two kinds:

* ``unseen_token``: the line carries a token that never occurs in the
  normal pool (an out-of-vocabulary signal) next to template words picked
  from several different templates.
* ``rare_token``: every token is from the normal pool, but the combination
  spans templates that never co-occur in normal lines.

Lines are written BGL-style: an alert tag (``-`` for normal) followed by
nine header fields and the message body.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

ANOMALY_KINDS = ("unseen_token", "rare_token")

# Letter-only vocabulary (digits would be rewritten by normalization).
# Four distinctive words per template.
_TEMPLATE_WORDS = [
    "cache", "flush", "completed", "bank",
    "memory", "page", "mapped", "segment",
    "disk", "write", "finished", "sector",
    "network", "packet", "routed", "gateway",
    "thread", "pool", "resized", "workers",
    "session", "token", "renewed", "client",
    "queue", "depth", "sampled", "consumer",
    "index", "shard", "merged", "replica",
    "timer", "tick", "elapsed", "interval",
    "buffer", "ring", "rotated", "writer",
    "socket", "stream", "accepted", "listener",
    "mount", "volume", "attached", "device",
    "lease", "grant", "extended", "holder",
    "batch", "job", "scheduled", "executor",
    "config", "value", "reloaded", "watcher",
    "heartbeat", "probe", "answered", "monitor",
    "snapshot", "block", "persisted", "storage",
    "cursor", "scan", "advanced", "reader",
    "quota", "limit", "checked", "tenant",
    "checksum", "frame", "verified", "decoder",
    "channel", "relay", "opened", "broker",
    "ticket", "grantor", "issued", "realm",
    "spool", "chunk", "drained", "archiver",
    "beacon", "pulse", "emitted", "tracker",
]

# Tokens reserved for unseen-token anomalies; disjoint from the pool above.
_ANOMALY_WORDS = [
    "segfault", "oops", "panicked", "watchdog", "corruption", "deadlock",
    "unreachable", "refused", "overrun", "underflow", "poisoned", "fenced",
    "stall", "abort", "thrash", "starvation", "backtrace", "misroute",
    "desync", "brownout", "lockup", "dropout", "hexdump", "tainted",
]

_COMMON_PREFIX = ("unit", "state")  # shared by every normal template

_WORDS_PER_TEMPLATE = 4
_ANOMALY_MIX_TEMPLATES = 6  # distinct templates a synthetic anomaly borrows from


def max_templates() -> int:
    return len(_TEMPLATE_WORDS) // _WORDS_PER_TEMPLATE


def _template_words(i: int) -> list[str]:
    base = i * _WORDS_PER_TEMPLATE
    return _TEMPLATE_WORDS[base : base + _WORDS_PER_TEMPLATE]


def _header(tag: str, i: int) -> str:
    ts = 1117838570 + i
    node = f"R{i % 64:02d}-M{i % 2}"
    return (
        f"{tag} {ts} 2005.06.03 {node} "
        f"2005-06-03-15.42.{i % 60:02d}.{i:06d} {node} RAS KERNEL INFO"
    )


def gen_synthetic(
    out_path: str | Path,
    n_normal: int,
    n_anomalies: int,
    n_templates: int = 20,
    anomaly_kind: str = "unseen_token",
    seed: int = 0,
) -> Path:
    """Write a labeled synthetic log file and return its path.

    Deterministic for a fixed seed.  ``n_anomalies`` may be zero; anomaly
    lines are shuffled uniformly among the normal ones.
    """
    if n_normal < 1:
        raise ValueError(f"n_normal must be >= 1, got {n_normal}")
    if n_anomalies < 0:
        raise ValueError(f"n_anomalies must be >= 0, got {n_anomalies}")
    if not 1 <= n_templates <= max_templates():
        raise ValueError(f"n_templates must be in [1, {max_templates()}], got {n_templates}")
    if anomaly_kind not in ANOMALY_KINDS:
        raise ValueError(f"anomaly_kind must be one of {ANOMALY_KINDS}, got {anomaly_kind!r}")

    rng = np.random.default_rng(seed)
    is_anomaly = np.zeros(n_normal + n_anomalies, dtype=bool)
    is_anomaly[:n_anomalies] = True
    rng.shuffle(is_anomaly)

    mix = min(_ANOMALY_MIX_TEMPLATES, n_templates)
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for i, anomalous in enumerate(is_anomaly):
            if anomalous:
                picked = rng.choice(n_templates, size=mix, replace=False)
                words = [
                    _template_words(int(t))[int(rng.integers(_WORDS_PER_TEMPLATE))]
                    for t in picked
                ]
                if anomaly_kind == "unseen_token":
                    words.insert(0, _ANOMALY_WORDS[int(rng.integers(len(_ANOMALY_WORDS)))])
                else:
                    extra = int(rng.integers(n_templates))
                    words.append(
                        _template_words(extra)[int(rng.integers(_WORDS_PER_TEMPLATE))]
                    )
                msg = " ".join(words)
                fh.write(f"{_header('FAILURE', i)} {msg}\n")
            else:
                t = int(rng.integers(n_templates))
                d = _template_words(t)
                param = int(rng.integers(1, 100000))
                msg = (
                    f"{_COMMON_PREFIX[0]} {_COMMON_PREFIX[1]} {param} "
                    f"{d[0]} {d[1]} {d[2]} {d[3]}"
                )
                fh.write(f"{_header('-', i)} {msg}\n")
    return out_path
