"""Constructive ReLU networks that memorize binary-coded samples exactly.

Four constructions, each exported as plain layered affine+ReLU weights (the
generator module's network type) so that recall is always evaluated through
the exported weights, never through side tables:

* a fitter interpolating anchor points to dyadic values by piecewise-linear
  nodal hats laid out across depth,
* a bit extractor reading the j-th binary digit of an ell-bit number with
  pure integer float arithmetic (hence bit-exact),
* their fused composition recalling per-anchor bit tables, and
* a multi-output generator that reproduces ell-bit truncations of target
  vectors at scaled spike anchors, within a prescribed L2 tolerance.

Depth is counted in affine transformations (weight matrices); width is the
largest hidden layer, and every hidden layer is padded with dead units to
the declared width so the exported architecture equals the declared one.

Bit decisions are made by clipped ramps with half-grid separation margins,
then re-saturated through a second clipped pair where upstream float dust
could otherwise leak into outputs; accumulator updates touch at most two
nonzero weights per row, keeping them exact in float64 regardless of dot
product evaluation order.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ObgcsError, ShapeError
from .generator import GeneratorNetwork, forward

MAX_BITS = 50  # int + 0.5 stays exactly representable up to 2^(MAX_BITS+1)


@dataclass
class BitSample:
    """An anchor paired with an ell-bit value y = sum_j 2^-j bits[j-1]."""

    z: np.ndarray
    bits: list
    y_value: float = field(default=None)

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=np.float64))
        self.bits = [int(b) for b in self.bits]
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")
        if not 1 <= len(self.bits) <= 52:
            raise ValueError("need between 1 and 52 bits")
        val = bits_to_value(self.bits)
        if self.y_value is None:
            self.y_value = val
        elif self.y_value != val:
            raise ValueError(f"y_value {self.y_value} != bits value {val}")


def bits_to_value(bits):
    """Exact dyadic value sum_j 2^-j b_j (float64-exact for <= 52 bits)."""
    acc = 0
    for b in bits:
        acc = (acc << 1) | int(b)
    return math.ldexp(acc, -len(bits))


def value_to_bits(value, ell):
    """Inverse of bits_to_value; the value must be an exact ell-bit dyadic."""
    ell = int(ell)
    scaled = math.ldexp(float(value), ell)
    i = round(scaled)
    if scaled != i or not 0 <= i < (1 << ell):
        raise ValueError(f"{value} is not an exact {ell}-bit dyadic in [0, 1)")
    return [(i >> (ell - 1 - j)) & 1 for j in range(ell)]


def truncate_to_bits(value, ell):
    """Keep the first ell binary digits of a value in [0, 1] (1.0 maps to 1 - 2^-ell)."""
    i = min(int(math.floor(math.ldexp(float(value), ell))), (1 << ell) - 1)
    i = max(i, 0)
    return [(i >> (ell - 1 - j)) & 1 for j in range(ell)]


@dataclass
class MemorizerNet:
    """A constructed network plus its declared size and recall metadata."""

    net: GeneratorNetwork
    width: int
    depth: int
    construction: str  # fitter | extractor | composed | generator
    ell: int
    cap_w: int = 0
    anchors: np.ndarray | None = None
    targets_truncated: np.ndarray | None = None

    def evaluate(self, x):
        """Run the exported weights on an input vector."""
        return forward(self.net, np.atleast_1d(np.asarray(x, dtype=np.float64)))


# --------------------------------------------------------------- layer stack

class _Stack:
    """Accumulates hidden layers; rows are (weight_row, bias) pairs."""

    def __init__(self, input_dim):
        self.input_dim = input_dim
        self.layers = []  # list of (W, b)

    @property
    def top_width(self):
        return self.layers[-1][0].shape[0] if self.layers else self.input_dim

    def add_layer(self, rows):
        """rows: list of (coeffs dict {prev_unit_index: weight}, bias)."""
        in_dim = self.top_width
        W = np.zeros((len(rows), in_dim))
        b = np.zeros(len(rows))
        for r, (coeffs, bias) in enumerate(rows):
            for idx, val in coeffs.items():
                W[r, idx] = val
            b[r] = bias
        self.layers.append((W, b))
        return len(self.layers) - 1

    def add_affine_layer(self, rows_matrix, bias_vec):
        """Add a layer given directly as arrays over the current top units."""
        W = np.asarray(rows_matrix, dtype=np.float64)
        if W.shape[1] != self.top_width:
            raise ShapeError("affine layer width mismatch")
        self.layers.append((W, np.asarray(bias_vec, dtype=np.float64)))
        return len(self.layers) - 1

    def finish(self, readout_rows, readout_bias, width):
        """Pad hidden layers to ``width`` and return a GeneratorNetwork."""
        weights = [W.copy() for W, _ in self.layers]
        biases = [b.copy() for _, b in self.layers]
        readout = np.atleast_2d(np.asarray(readout_rows, dtype=np.float64))
        rbias = np.atleast_1d(np.asarray(readout_bias, dtype=np.float64))
        weights.append(readout)
        biases.append(rbias)
        for i in range(len(weights) - 1):
            rows = weights[i].shape[0]
            if rows > width:
                raise CapacityError(f"layer {i} needs {rows} units > width {width}")
            if rows < width:
                pad = width - rows
                weights[i] = np.vstack([weights[i], np.zeros((pad, weights[i].shape[1]))])
                biases[i] = np.concatenate([biases[i], np.zeros(pad)])
                weights[i + 1] = np.hstack(
                    [weights[i + 1], np.zeros((weights[i + 1].shape[0], pad))])
        dims = [self.input_dim] + [w.shape[0] for w in weights]
        return GeneratorNetwork(dims, weights, biases)


# ------------------------------------------------------------ fitter machinery

def _separating_projection(anchors):
    """Deterministic 1-D projection making anchor images distinct."""
    count, k = anchors.shape
    if count == 1:
        return np.ones(k), anchors @ np.ones(k)
    rng = np.random.default_rng(0xF117)
    best = None
    for attempt in range(64):
        w = rng.standard_normal(k)
        t = anchors @ w
        ts = np.sort(t)
        gaps = np.diff(ts)
        if gaps.min() <= 0.0:
            continue
        quality = gaps.min() / max(ts[-1] - ts[0], 1e-300)
        if best is None or quality > best[0]:
            best = (quality, w, t)
        if attempt >= 7 and best is not None:
            break
    if best is None:
        raise ObgcsError("could not find a projection separating the anchors")
    return best[1], best[2]


def _interpolant_knots(ts_sorted, vals_sorted, lo, hi):
    """Ramp knots and slope-change coefficients for one consecutive chunk.

    The piecewise-linear bump passes through (t_i, v_i) for chunk members,
    is zero at the neighboring sample positions (or one unit beyond the
    extremes), and is identically zero outside that support, so it never
    disturbs any other sample.
    """
    u = ts_sorted[lo:hi]
    v = vals_sorted[lo:hi]
    left = ts_sorted[lo - 1] if lo > 0 else u[0] - 1.0
    right = ts_sorted[hi] if hi < len(ts_sorted) else u[-1] + 1.0
    knots = np.concatenate([[left], u, [right]])
    nodal = np.concatenate([[0.0], v, [0.0]])
    slopes = np.diff(nodal) / np.diff(knots)
    gammas = np.empty(len(knots))
    gammas[0] = slopes[0]
    gammas[1:-1] = np.diff(slopes)
    gammas[-1] = -slopes[-1]
    return knots, gammas


def _fitter_part(stack, anchors, values, max_chunk, num_layers, carry_j=False):
    """Append interpolation stages to ``stack``; returns the readout row dict.

    Each stage hosts one chunk of consecutive (in projected order) anchors as
    a nodal-hat bump; an accumulator channel folds finished bumps forward.
    Stages beyond the last chunk pass state through. With ``carry_j`` the
    final input coordinate rides along through every layer.
    """
    count = anchors.shape[0]
    w, t = _separating_projection(anchors)
    shift = 1.0 - t.min()
    ts = t + shift
    order = np.argsort(ts, kind="stable")
    ts_sorted = ts[order]
    vals_sorted = np.asarray(values, dtype=np.float64)[order]
    chunks = [(i, min(i + max_chunk, count)) for i in range(0, count, max_chunk)]
    if len(chunks) > num_layers:
        raise CapacityError(
            f"{count} anchors need {len(chunks)} interpolation stages, "
            f"budget is {num_layers}")

    k = stack.input_dim - (1 if carry_j else 0)
    pend_ramps = None  # (indices, gammas) awaiting fold into the accumulator
    for s in range(num_layers):
        rows = []
        first = s == 0
        if first:
            tc = {i: w[i] for i in range(k)}
            rows.append((tc, shift))                      # t channel
            rows.append(({}, 0.0))                        # accumulator = 0
        else:
            rows.append(({0: 1.0}, 0.0))                  # pass t
            acc = {1: 1.0}
            if pend_ramps is not None:
                for idx, g in zip(*pend_ramps):
                    acc[idx] = g
            rows.append((acc, 0.0))                       # fold previous bump
        if s < len(chunks):
            lo, hi = chunks[s]
            knots, gammas = _interpolant_knots(ts_sorted, vals_sorted, lo, hi)
            ramp_idx = []
            for knot in knots:
                if first:
                    rows.append(({i: w[i] for i in range(k)}, shift - knot))
                else:
                    rows.append(({0: 1.0}, -knot))
                ramp_idx.append(len(rows) - 1)
            pend_ramps = (ramp_idx, gammas)
        else:
            pend_ramps = None
        if carry_j:
            # the j channel rides at the top index of every layer
            j_src = stack.input_dim - 1 if first else stack.top_width - 1
            rows.append(({j_src: 1.0}, 0.0))
        stack.add_layer(rows)
    readout = {1: 1.0}
    if pend_ramps is not None:
        for idx, g in zip(*pend_ramps):
            readout[idx] = g
    return readout


def _check_dyadic_values(values, ell):
    for v in values:
        scaled = math.ldexp(float(v), ell)
        if scaled != round(scaled) or not 0 <= round(scaled) < (1 << ell):
            raise ValueError(f"target {v} is not an exact {ell}-bit dyadic in [0, 1)")


def _check_anchors(anchors):
    if anchors.ndim != 2:
        raise ShapeError("anchors must form a (count, k) array")
    seen = set()
    for row in anchors:
        key = row.tobytes()
        if key in seen:
            raise ValueError("duplicate anchors are not allowed")
        seen.add(key)


def fitter_capacity(cap_w, ell):
    """Largest sample count the fitter construction supports for (W, ell)."""
    return min(cap_w * cap_w * ell, 4 * cap_w * (ell + 1))


def build_fitter(samples, cap_w, ell):
    """Network of width 4W+4 and depth ell+2 interpolating dyadic samples.

    ``samples`` is a list of (anchor, value) pairs with distinct anchors and
    values of the exact ell-bit dyadic form. Interpolation is exact up to
    float roundoff (certified below 1e-12 at build time). Capacity is
    W^2 ell, additionally bounded by 4W(ell+1) points, the number of ramp
    units the stage layout can host.
    """
    cap_w, ell = int(cap_w), int(ell)
    if cap_w < 1 or not 1 <= ell <= MAX_BITS:
        raise ValueError(f"need cap_w >= 1 and 1 <= ell <= {MAX_BITS}")
    anchors = np.array([np.atleast_1d(np.asarray(z, dtype=np.float64)) for z, _ in samples])
    values = np.array([float(y) for _, y in samples])
    _check_anchors(anchors)
    _check_dyadic_values(values, ell)
    count = anchors.shape[0]
    if count > cap_w * cap_w * ell:
        raise CapacityError(f"{count} samples exceed capacity W^2*ell = {cap_w * cap_w * ell}")
    if count > 4 * cap_w * (ell + 1):
        raise CapacityError(
            f"{count} samples exceed the stage budget {4 * cap_w * (ell + 1)} "
            f"of this construction (W={cap_w}, ell={ell})")

    width = 4 * cap_w + 4
    stack = _Stack(anchors.shape[1])
    readout = _fitter_part(stack, anchors, values, max_chunk=4 * cap_w,
                           num_layers=ell + 1)
    net = stack.finish(_row_vec(readout, stack.top_width), [0.0], width)
    mem = MemorizerNet(net=net, width=width, depth=ell + 2, construction="fitter",
                       ell=ell, cap_w=cap_w, anchors=anchors)
    worst = max(abs(float(mem.evaluate(z)[0]) - v) for z, v in zip(anchors, values))
    if worst > 1e-12:
        raise ObgcsError(f"interpolation residual {worst:.2e} exceeds 1e-12; "
                         "anchor projections are too ill-conditioned")
    return mem


def _row_vec(coeffs, width):
    row = np.zeros(width)
    for idx, val in coeffs.items():
        row[idx] = val
    return row


# ------------------------------------------------------- bit extractor (G2)

def _ramp_bias(ell, t, offset):
    # threshold ramp for bit t: s = 2^(ell+1) x - 2^(ell+1-t) + offset
    return -math.ldexp(1.0, ell + 1 - t) + offset


def build_bit_extractor(ell):
    """Width-8, depth-2*ell network mapping (x, j) to the j-th bit of x.

    Valid for x = sum_{j<=ell} 2^-j b_j and integer j in [1, ell]. All
    internal quantities are integers or integers plus one half, exactly
    representable in float64, so the returned bits are exactly 0.0 or 1.0.
    The construction is certified by re-evaluating the exported weights over
    bit patterns at build time.
    """
    ell = int(ell)
    if not 1 <= ell <= MAX_BITS:
        raise ValueError(f"need 1 <= ell <= {MAX_BITS}")
    stack = _Stack(2)
    scale = math.ldexp(1.0, ell + 1)
    if ell == 1:
        stack.add_layer([({0: scale}, _ramp_bias(ell, 1, 1.5)),
                         ({0: scale}, _ramp_bias(ell, 1, 0.5))])
        net = stack.finish(_row_vec({0: 1.0, 1: -1.0}, stack.top_width), [0.0], 8)
    else:
        # unit slots per bit layer: 0 p1, 1 p2, 2 e1, 3 e2, 4 e3, 5 xp, 6 ap, 7 and
        P1, P2, E1, E2, E3, XP, AP, AND = range(8)
        stack.add_layer([
            ({0: scale}, _ramp_bias(ell, 1, 1.5)),
            ({0: scale}, _ramp_bias(ell, 1, 0.5)),
            ({1: 1.0}, 0.0),          # e1 = relu(j)
            ({1: 1.0}, -1.0),
            ({1: 1.0}, -2.0),
            ({0: 1.0}, 0.0),          # xp = relu(x)
            ({}, 0.0),                # accumulator starts at zero
            ({}, 0.0),                # selection slot unused this layer
        ])
        for t in range(2, ell + 1):
            step = math.ldexp(1.0, -(t - 1))
            x_coeffs = {XP: 1.0, P1: -step, P2: step}
            stack.add_layer([
                ({XP: scale, P1: -scale * step, P2: scale * step},
                 _ramp_bias(ell, t, 1.5)),
                ({XP: scale, P1: -scale * step, P2: scale * step},
                 _ramp_bias(ell, t, 0.5)),
                ({E2: 1.0}, 0.0),
                ({E2: 1.0}, -1.0),
                ({E2: 1.0}, -2.0),
                (x_coeffs, 0.0),
                ({AP: 1.0, AND: 1.0}, 0.0),
                ({P1: 1.0, P2: -1.0, E1: 1.0, E2: -2.0, E3: 1.0}, -1.0),
            ])
        stack.add_layer([
            ({P1: 1.0, P2: -1.0, E1: 1.0, E2: -2.0, E3: 1.0}, -1.0),  # and_ell
            ({AP: 1.0, AND: 1.0}, 0.0),
        ])
        if ell == 2:
            net = stack.finish(_row_vec({0: 1.0, 1: 1.0}, stack.top_width), [0.0], 8)
        else:
            stack.add_layer([({0: 1.0, 1: 1.0}, 0.0)])
            for _ in range(ell - 3):
                stack.add_layer([({0: 1.0}, 0.0)])
            net = stack.finish(_row_vec({0: 1.0}, stack.top_width), [0.0], 8)
    mem = MemorizerNet(net=net, width=8, depth=2 * ell, construction="extractor",
                       ell=ell)
    _certify_extractor(mem)
    return mem


def _certify_extractor(mem):
    ell = mem.ell
    patterns = range(1 << ell) if ell <= 10 else \
        np.random.default_rng(0xCE27).integers(0, 1 << ell, size=256)
    for word in patterns:
        word = int(word)
        x = math.ldexp(word, -ell)
        for j in range(1, ell + 1):
            want = float((word >> (ell - j)) & 1)
            got = float(mem.evaluate([x, float(j)])[0])
            if got != want:
                raise ObgcsError(
                    f"extractor certification failed at x={x}, j={j}: {got} != {want}")


def extract_bit(mem, x, j):
    """Convenience wrapper: evaluate an extractor at (x, j)."""
    return float(mem.evaluate([float(x), float(j)])[0])


# -------------------------------------------------- composed memorizer (G3)

def _extractor_part(stack, ell, x_row, x_bias, j_idx):
    """Append an exactified bit-selection pipeline reading x from an affine
    row over the current top layer and j from unit ``j_idx``.

    Uses saturation pairs so every selected-bit contribution is exactly 0.0
    or 1.0 even when x carries interpolation dust below the half-grid
    margin; accumulator rows touch two units only, keeping them order-exact.
    Returns the readout row dict. Appends ell+2 layers.
    """
    scale = math.ldexp(1.0, ell + 1)
    # slots: 0 p1, 1 p2, 2 e1, 3 e2, 4 e3, 5 xp, 6 ap, 7 a1, 8 a2, 9 as
    P1, P2, E1, E2, E3, XP, AP, A1, A2, AS = range(10)
    first = [
        ({i: scale * c for i, c in x_row.items()}, scale * x_bias + _ramp_bias(ell, 1, 1.5)),
        ({i: scale * c for i, c in x_row.items()}, scale * x_bias + _ramp_bias(ell, 1, 0.5)),
        ({j_idx: 1.0}, 0.0),
        ({j_idx: 1.0}, -1.0),
        ({j_idx: 1.0}, -2.0),
        (dict(x_row), x_bias),
        ({}, 0.0),
        ({}, 0.0),
        ({}, 0.0),
        ({}, 0.0),
    ]
    stack.add_layer(first)
    for t in range(2, ell + 1):
        step = math.ldexp(1.0, -(t - 1))
        stack.add_layer([
            ({XP: scale, P1: -scale * step, P2: scale * step}, _ramp_bias(ell, t, 1.5)),
            ({XP: scale, P1: -scale * step, P2: scale * step}, _ramp_bias(ell, t, 0.5)),
            ({E2: 1.0}, 0.0),
            ({E2: 1.0}, -1.0),
            ({E2: 1.0}, -2.0),
            ({XP: 1.0, P1: -step, P2: step}, 0.0),
            ({AP: 1.0, AS: 1.0}, 0.0),                      # two-term, exact
            ({P1: 2.0, P2: -2.0, E1: 2.0, E2: -4.0, E3: 2.0}, -2.5),
            ({P1: 2.0, P2: -2.0, E1: 2.0, E2: -4.0, E3: 2.0}, -3.5),
            ({A1: 1.0, A2: -1.0}, 0.0),                     # saturated and
        ])
    stack.add_layer([
        ({P1: 2.0, P2: -2.0, E1: 2.0, E2: -4.0, E3: 2.0}, -2.5),  # a1 for bit ell
        ({P1: 2.0, P2: -2.0, E1: 2.0, E2: -4.0, E3: 2.0}, -3.5),
        ({A1: 1.0, A2: -1.0}, 0.0),                                # as for bit ell-1
        ({AP: 1.0, AS: 1.0}, 0.0),
    ])
    stack.add_layer([
        ({0: 1.0, 1: -1.0}, 0.0),   # saturated last bit
        ({3: 1.0, 2: 1.0}, 0.0),    # accumulator + previous saturated bit
    ])
    return {0: 1.0, 1: 1.0}


def composed_capacity(cap_w, ell):
    """Largest anchor count the composed construction supports for (W, ell)."""
    return min(cap_w * cap_w * ell, 4 * cap_w * (2 * ell - 2))


def build_indexed_memorizer(samples, cap_w, ell):
    """Width 4W+6, depth 3*ell+1 network with net(z_i, j) = bits_i[j-1].

    ``samples`` is a list of (anchor, bits) pairs, one bit row of length ell
    per anchor. The network composes an interpolating fitter with the bit
    selection pipeline; outputs are exactly 0.0 or 1.0. Needs ell >= 2 (a
    one-bit table has no depth budget for the composition).
    """
    cap_w, ell = int(cap_w), int(ell)
    if cap_w < 1 or not 2 <= ell <= MAX_BITS:
        raise ValueError(f"need cap_w >= 1 and 2 <= ell <= {MAX_BITS}")
    anchors = np.array([np.atleast_1d(np.asarray(z, dtype=np.float64)) for z, _ in samples])
    bit_rows = []
    for _, bits in samples:
        bits = [int(b) for b in bits]
        if len(bits) != ell or any(b not in (0, 1) for b in bits):
            raise ValueError(f"each sample needs {ell} bits valued 0/1")
        bit_rows.append(bits)
    _check_anchors(anchors)
    count = anchors.shape[0]
    if count > cap_w * cap_w * ell:
        raise CapacityError(f"{count} anchors exceed capacity W^2*ell = {cap_w * cap_w * ell}")
    if count > 4 * cap_w * (2 * ell - 2):
        raise CapacityError(
            f"{count} anchors exceed the stage budget {4 * cap_w * (2 * ell - 2)} "
            f"of this construction (W={cap_w}, ell={ell})")
    values = np.array([bits_to_value(bits) for bits in bit_rows])

    width = 4 * cap_w + 6
    k = anchors.shape[1]
    stack = _Stack(k + 1)
    x_row = _fitter_part(stack, anchors, values, max_chunk=4 * cap_w,
                         num_layers=2 * ell - 2, carry_j=True)
    j_idx = stack.top_width - 1
    readout = _extractor_part(stack, ell, x_row, 0.0, j_idx)
    net = stack.finish(_row_vec(readout, stack.top_width), [0.0], width)
    mem = MemorizerNet(net=net, width=width, depth=3 * ell + 1,
                       construction="composed", ell=ell, cap_w=cap_w,
                       anchors=anchors)
    for z, bits in zip(anchors, bit_rows):
        for j in range(1, ell + 1):
            got = float(mem.evaluate(np.concatenate([z, [float(j)]]))[0])
            if got != float(bits[j - 1]):
                raise ObgcsError(
                    f"composed recall certification failed at j={j}: "
                    f"{got} != {bits[j - 1]}")
    return mem


def recall_bit(mem, z, j):
    """Convenience wrapper: evaluate a composed memorizer at (z, j)."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    return float(mem.evaluate(np.concatenate([z, [float(j)]]))[0])


# ------------------------------------------------- anchor generator (G, Thm)

def _reassembly_part(stack, ell, x_row, x_bias):
    """Append layers re-extracting and re-summing ell bits of an affine x.

    Two layers per bit (threshold pair, then residual update plus a
    saturation pair) and one final merge layer; 2*ell+1 layers in all. The
    running sum only ever adds an exact power of two times an exactly
    saturated bit through two-term rows, so the final unit holds the exact
    ell-bit truncation of x whenever x's dust is below the half-grid margin.
    Returns the readout row dict.
    """
    scale = math.ldexp(1.0, ell + 1)
    # A-layer slots: 0 p1, 1 p2, 2 xp, 3 acc, 4 bsat(prev)
    # B-layer slots: 0 xnext, 1 q1, 2 q2, 3 accm
    stack.add_layer([
        ({i: scale * c for i, c in x_row.items()}, scale * x_bias + _ramp_bias(ell, 1, 1.5)),
        ({i: scale * c for i, c in x_row.items()}, scale * x_bias + _ramp_bias(ell, 1, 0.5)),
        (dict(x_row), x_bias),
        ({}, 0.0),
        ({}, 0.0),
    ])
    for t in range(1, ell + 1):
        step = math.ldexp(1.0, -t)
        stack.add_layer([
            ({2: 1.0, 0: -step, 1: step}, 0.0),   # residual minus extracted bit
            ({0: 2.0, 1: -2.0}, -0.5),            # saturation pair for bit t
            ({0: 2.0, 1: -2.0}, -1.5),
            ({3: 1.0, 4: math.ldexp(1.0, -(t - 1))}, 0.0),  # fold previous bit
        ])
        if t < ell:
            stack.add_layer([
                ({0: scale}, _ramp_bias(ell, t + 1, 1.5)),
                ({0: scale}, _ramp_bias(ell, t + 1, 0.5)),
                ({0: 1.0}, 0.0),
                ({3: 1.0}, 0.0),
                ({1: 1.0, 2: -1.0}, 0.0),         # saturated bit t
            ])
    stack.add_layer([
        ({3: 1.0}, 0.0),            # accumulated bits 1..ell-1
        ({1: 1.0, 2: -1.0}, 0.0),   # saturated bit ell
    ])
    return {0: 1.0, 1: math.ldexp(1.0, -ell)}


def build_theorem_generator(targets, tau, latent_dim=1):
    """Generator reproducing ell-bit truncations of targets at spike anchors.

    Given s target vectors in [0, 1]^n and a tolerance tau in (0, 1), sets
    ell = ceil(log2(2n/tau)) + 1, anchors z_i = e1 / (i * n), and builds one
    block per output coordinate: an interpolating fitter followed by the
    bit re-extraction pipeline. The assembled network has depth 3*ell+2 and
    width (4*ceil(sqrt(s*n/ell)) + 6) * n; at every anchor the output equals
    the truncated target exactly (coordinatewise), hence lies within tau in
    L2. Certified at build time.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if targets.ndim != 2:
        raise ShapeError("targets must form an (s, n) array")
    if np.any(targets < 0.0) or np.any(targets > 1.0):
        raise ValueError("targets must lie in the unit cube")
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    s, n = targets.shape
    ell = int(math.ceil(math.log2(2.0 * n / tau))) + 1
    if ell > MAX_BITS:
        raise CapacityError(f"tau={tau} needs {ell} bits per coordinate "
                            f"(> {MAX_BITS} supported by float64 exactness)")
    cap_w = int(math.ceil(math.sqrt(s * n / ell)))
    if s > 4 * cap_w * ell:
        raise CapacityError(
            f"{s} targets exceed the per-coordinate stage budget {4 * cap_w * ell}")
    k = int(latent_dim)
    if k < 1:
        raise ValueError("latent dimension must be >= 1")

    anchors = np.zeros((s, k))
    anchors[:, 0] = 1.0 / (np.arange(1, s + 1) * n)
    trunc_bits = [[truncate_to_bits(targets[i, c], ell) for c in range(n)]
                  for i in range(s)]
    trunc_vals = np.array([[bits_to_value(trunc_bits[i][c]) for c in range(n)]
                           for i in range(s)])

    block_width = 4 * cap_w + 6
    blocks = []
    for c in range(n):
        stack = _Stack(k)
        x_row = _fitter_part(stack, anchors, trunc_vals[:, c],
                             max_chunk=4 * cap_w, num_layers=ell)
        readout = _reassembly_part(stack, ell, x_row, 0.0)
        blocks.append(stack.finish(_row_vec(readout, stack.top_width), [0.0],
                                   block_width))

    net = _stack_parallel(blocks, k)
    mem = MemorizerNet(net=net, width=block_width * n, depth=3 * ell + 2,
                       construction="generator", ell=ell, cap_w=cap_w,
                       anchors=anchors, targets_truncated=trunc_vals)
    worst_inf = 0.0
    for i in range(s):
        out = mem.evaluate(anchors[i])
        worst_inf = max(worst_inf, float(np.max(np.abs(out - trunc_vals[i]))))
    if worst_inf != 0.0:
        raise ObgcsError(f"anchor reproduction is not exact (max dev {worst_inf:.3e})")
    gap = max(float(np.linalg.norm(trunc_vals[i] - targets[i])) for i in range(s))
    if gap > tau:
        raise ObgcsError(f"truncation distance {gap:.3e} exceeds tau={tau}")
    return mem


def _stack_parallel(blocks, input_dim):
    """Combine equally-deep single-output blocks into one multi-output net."""
    depth = len(blocks[0].weights)
    if any(len(b.weights) != depth for b in blocks):
        raise ShapeError("blocks must share depth")
    weights, biases = [], []
    for layer in range(depth):
        if layer == 0:
            W = np.vstack([b.weights[0] for b in blocks])
        else:
            mats = [b.weights[layer] for b in blocks]
            W = np.zeros((sum(m.shape[0] for m in mats), sum(m.shape[1] for m in mats)))
            r = c = 0
            for m in mats:
                W[r:r + m.shape[0], c:c + m.shape[1]] = m
                r += m.shape[0]
                c += m.shape[1]
        weights.append(W)
        biases.append(np.concatenate([b.biases[layer] for b in blocks]))
    dims = [input_dim] + [w.shape[0] for w in weights]
    return GeneratorNetwork(dims, weights, biases)
