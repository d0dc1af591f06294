"""Reference CLAHE on the 8x8 two-level fixture (2x2 tiles, 4 bins, clip 0.5).

Written with exact fractions, independent of the C++ implementation.
"""
from fractions import Fraction as F

W = H = 8
T = 2
BINS = 4
CLIP = F(1, 2)

img = [[F(1, 5) if x < 3 else F(4, 5) for x in range(W)] for y in range(H)]


def bin_of(v):
    return min(int(v * BINS), BINS - 1)


def tile_lut(tx, ty):
    xs = range(tx * W // T, (tx + 1) * W // T)
    ys = range(ty * H // T, (ty + 1) * H // T)
    n = len(xs) * len(ys)
    hist = [F(0)] * BINS
    for y in ys:
        for x in xs:
            hist[bin_of(img[y][x])] += 1
    limit = CLIP * n
    excess = sum(max(c - limit, 0) for c in hist)
    hist = [min(c, limit) + excess / BINS for c in hist]
    lut, cum = [], F(0)
    for c in hist:
        cum += c
        lut.append(min(cum / n, F(1)))
    return lut


luts = {(i, j): tile_lut(i, j) for i in range(T) for j in range(T)}
centers = [F(W, T) * (i + F(1, 2)) for i in range(T)]


def weights(pos):
    if pos <= centers[0]:
        return 0, 0, F(0)
    if pos >= centers[-1]:
        return T - 1, T - 1, F(0)
    return 0, 1, (pos - centers[0]) / (centers[1] - centers[0])


out = []
for y in range(H):
    j0, j1, wy = weights(y + F(1, 2))
    row = []
    for x in range(W):
        i0, i1, wx = weights(x + F(1, 2))
        b = bin_of(img[y][x])
        top = (1 - wx) * luts[(i0, j0)][b] + wx * luts[(i1, j0)][b]
        bot = (1 - wx) * luts[(i0, j1)][b] + wx * luts[(i1, j1)][b]
        row.append((1 - wy) * top + wy * bot)
    out.append(row)

for row in out:
    print(", ".join(str(v) for v in row))
