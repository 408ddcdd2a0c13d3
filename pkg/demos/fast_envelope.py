"""
Envelope oscillating at a tenth of the drive frequency: the first-order
effective Hamiltonian, one line per envelope harmonic.
"""
from floquetflow import fast_expand, format_expr
from floquetflow.modelfile import load_model

model = load_model("fastmod_demo")
res = fast_expand(model.fast)
print("validity J*rho =", res.diagnostics["validity"])
for p, vec in sorted(res.heff1.items()):
    terms = {lab: format_expr(c) for lab, c in zip(model.algebra.labels, vec) if c}
    print(f"e^({p} i Omega t):", terms)
