#!/usr/bin/env python3
"""Writes the small checked-in corpus under tests/fixtures/corpus.

Layout per tensor file: b"GHST", then little-endian u32 version, n_layers,
n_tokens, hidden_dim, then the layers as row-major little-endian float32.
Only numpy is needed. Output is deterministic for a given numpy version.
"""

import json
import pathlib
import struct

import numpy as np

SEED = 20240917
N_LAYERS = 3
HIDDEN = 16
DOCS_PER_SOURCE = 3
# Source label -> spectral decay exponent of its hidden states.
SOURCES = {"original": 0.4, "gen_a": 0.8, "gen_b": 1.2, "gen_c": 1.6}

TEXTS = [
    "The river wound slowly through the valley, carrying leaves from the autumn forest.",
    "A small bakery on the corner sells bread every morning before the sun rises.",
    "Scientists measured the temperature of the lake at dawn and again at dusk.",
]
REWRITES = {
    "gen_a": [
        "The river moved slowly through the valley and carried autumn leaves along.",
        "Every morning before sunrise, a little corner bakery sells fresh bread.",
        "At dawn and again at dusk, scientists measured the lake temperature.",
    ],
    "gen_b": [
        "Through the valley the slow river carried leaves from the forest in autumn.",
        "Bread is sold by the small corner bakery each morning before dawn.",
        "The lake's temperature was measured by scientists at dawn and dusk.",
    ],
    "gen_c": [
        "River slow valley leaves autumn forest carried.",
        "Bakery corner bread morning sun before rises sells.",
        "Scientists lake temperature dawn dusk measured again.",
    ],
}


def orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def layer(n_tokens, alpha, rng):
    r = min(n_tokens, HIDDEN)
    s = np.arange(1, r + 1, dtype=np.float64) ** -alpha
    u = orthogonal(n_tokens, rng)[:, :r]
    v = orthogonal(HIDDEN, rng)[:, :r]
    x = (u * s) @ v.T
    # Offset so resultant length varies with the source, plus jitter.
    x += 0.05 * alpha * rng.standard_normal(HIDDEN)
    return (x * 10.0).astype("<f4")


def write_ghst(path, layers):
    n, d = layers[0].shape
    with open(path, "wb") as f:
        f.write(b"GHST")
        f.write(struct.pack("<4I", 1, len(layers), n, d))
        for m in layers:
            f.write(np.ascontiguousarray(m, dtype="<f4").tobytes())


def main():
    out = pathlib.Path(__file__).resolve().parent / "corpus"
    (out / "tensors").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    docs = []
    for source, alpha in SOURCES.items():
        for i in range(DOCS_PER_SOURCE):
            doc_id = f"{source}-{i}"
            n_tokens = int(rng.integers(24, 41))
            rel = f"tensors/{doc_id}.ghst"
            write_ghst(out / rel, [layer(n_tokens, alpha, rng) for _ in range(N_LAYERS)])
            text = TEXTS[i] if source == "original" else REWRITES[source][i]
            record = {
                "doc_id": doc_id,
                "source_label": source,
                "language": "en",
                "text": text,
                "tensor_path": rel,
            }
            if source != "original":
                record["reference_doc_id"] = f"original-{i}"
            docs.append(record)
    manifest = {"format_version": 1, "tester_model": "fixture/tiny-tester", "documents": docs}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
