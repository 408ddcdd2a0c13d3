"""
Compare the symbolic series with a brute-force flow on the truncated
Kamiltonian for one constant-envelope drive, across frequencies.
"""
import numpy as np

from floquetflow import expand, parse_expr
from floquetflow.algebra import builtin_su2
from floquetflow.numeric import NumericModel, dense_flow_oracle
from floquetflow.symbolic import FourierOperator

su2 = builtin_su2()
h = FourierOperator.from_labels(su2, {
    0: {"sz": parse_expr("1/4"), "sx": parse_expr("-1/8")},
    1: {"sx": parse_expr("1/2 + 1/4*I"), "sz": parse_expr("3/8*I")},
}).hermitian_completed()

res = expand(h, 4)
omegas = [10.0, 20.0, 40.0, 80.0]
errs = {2: [], 4: []}
for w in omegas:
    nm = NumericModel(h, {}, {}, omega=w)
    mats = {n: np.tensordot(nm.coefficients(h, n, 0.0), su2.rep_array(), 1) for n in h.harmonics()}
    orc = dense_flow_oracle(mats, w, K=12)
    for N in errs:
        series = sum(w ** -i * nm.op_matrix(res.h_eff[i], 0.0, phase=0.0) for i in range(N + 1))
        errs[N].append(np.linalg.norm(orc.h_eff - series))

for N, e in errs.items():
    p = -np.polyfit(np.log(omegas), np.log(e), 1)[0]
    print(f"N={N}: errors {['%.1e' % x for x in e]}  slope {p:.2f}")
