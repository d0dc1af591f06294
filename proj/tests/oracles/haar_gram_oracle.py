"""Gram matrix of the deterministic Haar atoms for P=8, overcompleteness 4.

Builds the atoms directly from their definition (constant column, Haar
wavelets coarse to fine, then circular shifts of the mother wavelet per
scale), flags atoms that duplicate an earlier one up to sign, and writes
the Gram matrix over the kept atoms as a C++ initializer fixture.
"""
import sys
import numpy as np

P, FACTOR = 8, 4
Q = P * FACTOR
n = 8


def wavelet(length, start):
    v = np.zeros(n)
    for i in range(length):
        v[(start + i) % n] = (1 if i < length // 2 else -1) / np.sqrt(length)
    return v


atoms = [np.full(n, 1 / np.sqrt(n))]
length = n
while length >= 2:
    atoms += [wavelet(length, s) for s in range(0, n, length)]
    length //= 2
length = 2
while length <= n:
    atoms += [wavelet(length, s) for s in range(n) if s % length]
    length *= 2
atoms = atoms[:Q]

kept = []
for j, a in enumerate(atoms):
    a = a[:P] / np.linalg.norm(a[:P])
    if all(abs(a @ atoms[k][:P] / np.linalg.norm(atoms[k][:P])) <= 1 - 1e-9 for k in kept):
        kept.append(j)

A = np.stack([atoms[j][:P] / np.linalg.norm(atoms[j][:P]) for j in kept], axis=1)
G = A.T @ A

out = sys.stdout
out.write("// Generated by tests/oracles/haar_gram_oracle.py\n")
out.write("inline constexpr int kHaarKept[] = {" + ", ".join(map(str, kept)) + "};\n")
out.write("inline constexpr double kHaarGram[%d][%d] = {\n" % (len(kept), len(kept)))
for row in G:
    out.write("    {" + ", ".join(repr(float(v)) for v in row) + "},\n")
out.write("};\n")
