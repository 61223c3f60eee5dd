"""Writing the polynomial system for G^1 and handing it to an SMT solver."""
from epsnash import build_gn, gn_exact_ne
from epsnash.etr_export import build_etr, check_assignment, emit_smtlib, etr_assignment, support_of

g = build_gn(1)
sigma = gn_exact_ne(1)
system = build_etr(g, support=support_of(g, sigma))
print(system.census())

text = emit_smtlib(system)
print("\n".join(text.splitlines()[180:186]))

# the known equilibrium satisfies every constraint
print("violations at the known equilibrium:", len(check_assignment(system, etr_assignment(g, sigma))))

try:
    import z3
except ImportError:
    z3 = None
if z3 is not None:
    s = z3.Solver()
    s.from_string(text)
    print("z3 says:", s.check())
    m = s.model()
    for d in m.decls():
        if d.name() in ("p[r_1,t_1]", "p[c_1,d_1]"):
            print(" ", d.name(), "=", m[d])
