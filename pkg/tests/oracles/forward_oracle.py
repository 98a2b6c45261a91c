"""Straight-line reference forward pass, independent of sparse_strike.oracle.

Reads the policy JSON directly and evaluates it with plain loops and the
math module. Run as a script to print the golden values frozen in the tests.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

POLICY_DIR = Path(__file__).resolve().parents[2] / "src" / "sparse_strike" / "data" / "policies"


def golden_state_8x8():
    """8x8x1 test state as nested lists [row][col][channel]."""
    return [[[(37 * r + 11 * c * c + 5) % 256] for c in range(8)] for r in range(8)]


def forward(raw: dict, state) -> list[float]:
    h, w, ch = raw["input_shape"]
    # channels-first copy, scaled by 1/255
    x = [[[state[r][c][k] / 255.0 for c in range(w)] for r in range(h)] for k in range(ch)]
    flat = None
    for layer in raw["layers"]:
        kind = layer["kind"]
        if kind == "flatten":
            flat = [v for plane in x for row in plane for v in row]
            continue
        wts, bias = layer["weights"], layer["bias"]
        if kind == "conv":
            oc = layer["out_channels"]
            kh, kw = layer["kernel"]
            s = layer.get("stride", 1)
            sh, sw = (s, s) if isinstance(s, int) else s
            ic, ih, iw = len(x), len(x[0]), len(x[0][0])
            oh, ow = (ih - kh) // sh + 1, (iw - kw) // sw + 1
            out = []
            for o in range(oc):
                plane = []
                for i in range(oh):
                    row = []
                    for j in range(ow):
                        acc = bias[o]
                        for c in range(ic):
                            for a in range(kh):
                                for b in range(kw):
                                    idx = ((o * ic + c) * kh + a) * kw + b
                                    acc += wts[idx] * x[c][i * sh + a][j * sw + b]
                        if layer["activation"] == "relu":
                            acc = max(acc, 0.0)
                        row.append(acc)
                    plane.append(row)
                out.append(plane)
            x = out
        else:
            if flat is None:
                flat = [v for plane in x for row in plane for v in row]
            n_in = len(flat)
            out = []
            for o in range(layer["out_features"]):
                acc = bias[o]
                for i in range(n_in):
                    acc += wts[o * n_in + i] * flat[i]
                if layer["activation"] == "relu":
                    acc = max(acc, 0.0)
                out.append(acc)
            flat = out
    logits = flat
    t = raw.get("softmax_temperature", 1.0) if raw["head"] == "q_values" else 1.0
    top = max(logits)
    exps = [math.exp((v - top) / t) for v in logits]
    total = sum(exps)
    return [e / total for e in exps]


def entropy_ratio(probs) -> float:
    return -sum(p * math.log(p) for p in probs if p > 0) / math.log(len(probs))


def load(name: str) -> dict:
    return json.loads((POLICY_DIR / f"{name}.json").read_text())


def main() -> None:
    conv = load("conv_small")
    lin = load("linear_vulnerable")
    zero = [[[0] for _ in range(8)] for _ in range(8)]
    hot = [[[0] for _ in range(8)] for _ in range(8)]
    hot[0][0][0] = 255
    print("conv_small golden:", forward(conv, golden_state_8x8()))
    print("conv_small zero:", forward(conv, zero))
    print("linear_vulnerable zero:", forward(lin, zero))
    print("linear_vulnerable hot:", forward(lin, hot))
    print("linear_vulnerable golden:", forward(lin, golden_state_8x8()))
    e = [math.exp(1.0), 1.0, 1.0, 1.0]
    print("softmax([1,0,0,0]):", [v / sum(e) for v in e])

    if "--replay" in sys.argv:
        # mean attack uncertainty of a recorded mini_pong rollout
        sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))
        from sparse_strike.trajectory import load as load_traj

        _, records = load_traj(sys.argv[sys.argv.index("--replay") + 1])
        pong = load("mini_pong_expert")
        zetas = []
        for rec in records:
            px = rec.state.pixels.tolist()
            zetas.append(entropy_ratio(forward(pong, px)))
        print("mean zeta:", math.fsum(zetas) / len(zetas), "frames:", len(zetas))


if __name__ == "__main__":
    main()
