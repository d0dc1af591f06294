"""TOP-landmark descriptor of a fixed 12-landmark face.

Per plane: drop one coordinate, subtract the centroid, divide by the largest
radius, take each point's radius. Writes the projections and the 36-vector.
"""
import sys
import numpy as np

L = np.array([
    [-0.4, 0.45, 0.61], [0.4, 0.45, 0.6], [-0.55, 0.25, 0.52], [-0.2, 0.25, 0.74],
    [0.2, 0.25, 0.73], [0.55, 0.25, 0.51], [0.0, -0.1, 1.05], [0.0, -0.3, 0.88],
    [-0.3, -0.6, 0.63], [0.3, -0.6, 0.64], [0.0, -0.5, 0.76], [0.0, -0.7, 0.66],
])
planes = [(0, 1), (0, 2), (1, 2)]
omega = []
for a, b in planes:
    p = L[:, [a, b]]
    p = p - p.mean(axis=0)
    r = np.linalg.norm(p, axis=1)
    omega += list(r / r.max())
sys.stdout.write("// Generated by tests/oracles/top_oracle.py\n")
sys.stdout.write("inline const std::vector<std::array<double, 3>> kFaceLandmarks = {%s};\n"
                 % ", ".join("{" + ", ".join(repr(float(v)) for v in row) + "}" for row in L))
sys.stdout.write("inline const std::vector<double> kFaceTop = {%s};\n" % ", ".join(repr(float(v)) for v in omega))
