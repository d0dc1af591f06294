"""Block descriptors of the 16x16 fixture image (grid 2, 4 orientation bins).

Vectorized with numpy: edge-replicated central differences, unsigned
orientations binned over [0, pi), magnitude-weighted and normalized per
block, block mean first. Writes the padded, L2-normalized vector.
"""
import sys
import numpy as np

G, BINS, PAD, N = 2, 4, 24, 16


def pixel(x, y):
    if y < 8:
        return 0.2 if x < 5 else 0.6
    return 0.1 + 0.03 * x + 0.02 * y if x >= 8 else 0.5


img = np.array([[pixel(x, y) for x in range(N)] for y in range(N)])
p = np.pad(img, 1, mode="edge")
gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
mag = np.hypot(gx, gy)
theta = np.mod(np.arctan2(gy, gx), np.pi)
bins = np.minimum((theta / np.pi * BINS).astype(int), BINS - 1)

B = N // G
vec = []
for by in range(G):
    for bx in range(G):
        sl = (slice(by * B, (by + 1) * B), slice(bx * B, (bx + 1) * B))
        hist = np.bincount(bins[sl].ravel(), weights=mag[sl].ravel(), minlength=BINS)
        if hist.sum() > 0:
            hist = hist / hist.sum()
        vec += [img[sl].mean()] + list(hist)
vec = np.array(vec + [0.0] * (PAD - len(vec)))
vec /= np.linalg.norm(vec)
sys.stdout.write("// Generated by tests/oracles/feature_oracle.py\n")
sys.stdout.write("inline const std::vector<double> kFeatureFixture = {%s};\n" % ", ".join(repr(float(v)) for v in vec))
