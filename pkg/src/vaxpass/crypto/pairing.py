"""Supersingular pairing group used by the re-encryption scheme.

Curve: y^2 = x^3 + x over F_p with p ≡ 3 (mod 4), which is supersingular
with #E(F_p) = p + 1.  G1 is the subgroup of prime order Q; the target
group GT lives in F_p² = F_p[i]/(i²+1).  The distortion map
φ(x, y) = (−x, iy) turns the Tate pairing into a symmetric, non-degenerate
pairing on G1 × G1.

Parameters below were generated once (512-bit p, 161-bit Q with
Q | p + 1) and are fixed for reproducibility; this group targets
desk-scale protocol runs, not production key sizes.
"""

from __future__ import annotations

from ..errors import DecodeError

Q = 0x10000000000000000000000000000000000000007
P = 0xDD487F85682919314E8564E27CE75AA9197BB09780B55FD79F23473F2BFC49361B47EDC0BDE5800E871067046A19204A2C5DB120D6AF25E75099B48E8ADE5497
_GX = 0xC025E41E7D2D0DA17BE962839704DF71B6F7F4514306EEE3F32DE04C195E2F8DD142027860A55965E267C3B15A41DA7B13670E70936E06D941032CA818DDC62A
_GY = 0xF06FF75E3A6682E09A148C8BBC3FA145F1E7079425525C06BE636430AD424F9EFE2CE8BF422FE0B59A539E167A9008D67E3C5B9484152898352FA5F7F007D4A

_COORD_SIZE = 64  # bytes per F_p coordinate
_FINAL_EXP = (P * P - 1) // Q

Fp2 = tuple[int, int]  # a + b·i with i² = −1
FP2_ONE: Fp2 = (1, 0)

Point = tuple[int, int] | None  # affine; None is the point at infinity


# ---------------------------------------------------------------- F_p² ----

def fp2_mul(x: Fp2, y: Fp2) -> Fp2:
    a, b = x
    c, d = y
    ac = a * c % P
    bd = b * d % P
    return ((ac - bd) % P, ((a + b) * (c + d) - ac - bd) % P)


def fp2_sqr(x: Fp2) -> Fp2:
    a, b = x
    return ((a + b) * (a - b) % P, 2 * a * b % P)


def fp2_inv(x: Fp2) -> Fp2:
    a, b = x
    n = pow((a * a + b * b) % P, -1, P)
    return (a * n % P, -b * n % P)


def fp2_pow(x: Fp2, e: int) -> Fp2:
    r = FP2_ONE
    while e:
        if e & 1:
            r = fp2_mul(r, x)
        x = fp2_sqr(x)
        e >>= 1
    return r


def fp2_to_bytes(x: Fp2) -> bytes:
    return x[0].to_bytes(_COORD_SIZE, "big") + x[1].to_bytes(_COORD_SIZE, "big")


def fp2_from_bytes(raw: bytes) -> Fp2:
    if len(raw) != 2 * _COORD_SIZE:
        raise DecodeError("bad field-element length")
    a = int.from_bytes(raw[:_COORD_SIZE], "big")
    b = int.from_bytes(raw[_COORD_SIZE:], "big")
    if a >= P or b >= P:
        raise DecodeError("field element out of range")
    return (a, b)


# -------------------------------------------------------------- E(F_p) ----

def ec_add(p1: Point, p2: Point) -> Point:
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2:
        if (y1 + y2) % P == 0:
            return None
        lam = (3 * x1 * x1 + 1) * pow(2 * y1, -1, P) % P
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    return (x3, (lam * (x1 - x3) - y1) % P)


def ec_mul(k: int, point: Point) -> Point:
    acc: Point = None
    while k:
        if k & 1:
            acc = ec_add(acc, point)
        point = ec_add(point, point)
        k >>= 1
    return acc


def is_on_curve(point: Point) -> bool:
    if point is None:
        return True
    x, y = point
    return (y * y - (x * x * x + x)) % P == 0


def point_to_bytes(point: Point) -> bytes:
    if point is None:
        raise DecodeError("cannot encode the point at infinity")
    return point[0].to_bytes(_COORD_SIZE, "big") + point[1].to_bytes(_COORD_SIZE, "big")


def point_from_bytes(raw: bytes) -> Point:
    if len(raw) != 2 * _COORD_SIZE:
        raise DecodeError("bad point length")
    x = int.from_bytes(raw[:_COORD_SIZE], "big")
    y = int.from_bytes(raw[_COORD_SIZE:], "big")
    pt = (x, y)
    if x >= P or y >= P or not is_on_curve(pt):
        raise DecodeError("point not on curve")
    return pt


GEN: Point = (_GX, _GY)


# ------------------------------------------------------------- pairing ----

def pairing(p1: Point, p2: Point) -> Fp2:
    """Modified Tate pairing ê(p1, p2) = tate(p1, φ(p2)) ∈ GT.

    Miller's algorithm with denominator elimination: vertical-line values
    land in F_p and are annihilated by the final exponentiation because
    (p − 1) divides (p² − 1)/Q.
    """
    if p1 is None or p2 is None:
        return FP2_ONE
    xq, yq = p2
    xs = (-xq) % P  # φ(p2) = (−xq, i·yq): real x, imaginary y
    f = FP2_ONE
    t = p1
    x1, y1 = p1
    for bit in bin(Q)[3:]:
        xt, yt = t
        lam = (3 * xt * xt + 1) * pow(2 * yt, -1, P) % P
        line = ((-yt - lam * (xs - xt)) % P, yq)
        f = fp2_mul(fp2_sqr(f), line)
        t = ec_add(t, t)
        if bit == "1":
            xt, yt = t
            if xt == x1:
                # t == −p1: vertical line, value in F_p, killed later
                t = ec_add(t, p1)
                continue
            lam = (yt - y1) * pow(xt - x1, -1, P) % P
            line = ((-yt - lam * (xs - xt)) % P, yq)
            f = fp2_mul(f, line)
            t = ec_add(t, p1)
    return fp2_pow(f, _FINAL_EXP)


# ê(GEN, GEN), the fixed GT generator; computed lazily once
_GT_GEN: Fp2 | None = None


def gt_generator() -> Fp2:
    global _GT_GEN
    if _GT_GEN is None:
        _GT_GEN = pairing(GEN, GEN)
        assert _GT_GEN != FP2_ONE, "degenerate pairing parameters"
    return _GT_GEN
