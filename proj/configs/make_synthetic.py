import sys

import numpy as np

rng = np.random.default_rng(int(sys.argv[2]) if len(sys.argv) > 2 else 0)
centers = np.array([[-4, -4], [4, -4], [-4, 4], [4, 4]], dtype=float)
labels = np.arange(20000) % 4
points = centers[labels] + rng.standard_normal((labels.size, 2))
np.savetxt(sys.argv[1], points, delimiter=",", fmt="%.17g")
