import time

import numpy as np

from fastdrift.fields import DomainSpec, VectorField3, make_field, vf_norm
from fastdrift.homological import DriverField
from fastdrift.normalform import (
    StepParams, check_step_hypotheses, nf_step, nft_iterate,
)

d = DomainSpec(I_interval=(0.0, 1.0), Y_interval=(3.0, 3.01), widen_sigma=0.10,
               grid_I=9, grid_y=101, K_max=8)
drv = DriverField.from_callables(d, lambda I, y: 1.5 + 0.2 * np.tanh(y),
                                 lambda I, y: 0.1 * np.exp(-y))


def pert(eps):
    return VectorField3(
        make_field(d, lambda I, y, psi: eps * np.cos(psi)),
        make_field(d, lambda I, y, psi: eps * np.sin(psi)),
        make_field(d, lambda I, y, psi: eps * np.cos(psi)),
    )


# step-lemma params (criterion 4)
step_params = StepParams(u=(10.0, 0.10, 0.26), w=(1.0, 0.024, 0.05), s1=0.01, s2=0.01, p=2)
print("== step lemma fixture ==")
for eps in (1e-2, 1e-3, 1e-4):
    t0 = time.time()
    P = pert(eps)
    Pp, diag = nf_step(drv, P, step_params)
    print(f"eps={eps:.0e} normP={diag.norm_before:.4e} normP+={diag.norm_after:.4e} "
          f"bound={diag.bound_after:.4e} 2Q|P|={diag.smallness:.3f} q={diag.q:.3e} "
          f"res={diag.residual:.1e} ({time.time()-t0:.1f}s)")

ns = [vf_norm(pert(e), step_params.u, step_params.w) for e in (1e-2, 1e-3, 1e-4)]
nps = []
for eps in (1e-2, 1e-3, 1e-4):
    _, diag = nf_step(drv, pert(eps), step_params)
    nps.append(diag.norm_after)
slope = np.polyfit(np.log(ns), np.log(nps), 1)[0]
print("slope:", slope)

# NFT params (criterion 5)
nft_params = StepParams(u=(10.0, 0.10, 0.26), w=(1.0, 0.0123, 0.024), s1=0.01, s2=0.01, p=8)
print("== NFT fixture, eps=2e-4 ==")
diag0 = check_step_hypotheses(drv, pert(2e-4), nft_params)
print("flags:", diag0.flags)
print(f"Q={diag0.Q:.3f} chi={diag0.chi:.3f} th1={diag0.theta1:.2e} eta={diag0.eta:.4f} "
      f"1/sqrt(p)={1/np.sqrt(8):.4f} normP={diag0.norm_before:.4e}")
t0 = time.time()
Pstar, hist = nft_iterate(drv, pert(2e-4), nft_params)
print("norms:", ["%.3e" % n for n in hist.norms])
print("ratios to envelope:", ["%.3f" % (hist.norms[j] / (2.0 ** -(j - 1) * hist.norms[1]))
                              for j in range(1, len(hist.norms))])
print("final_ok:", hist.final_ok, " final/initial:", hist.norms[-1] / hist.norms[0],
      " vs 2^-9:", 2.0 ** -9, f" ({time.time()-t0:.1f}s)")

# check-hypotheses example: all flags true at eps <= 1e-3 with p=2
flag_params = StepParams(u=(10.0, 0.10, 0.26), w=(1.0, 0.0123, 0.024), s1=0.01, s2=0.01, p=2)
for eps in (1e-3, 1e-4):
    dd = check_step_hypotheses(drv, pert(eps), flag_params)
    print(f"eps={eps:.0e} all flags:", all(dd.flags.values()), dd.flags, f"eta={dd.eta:.3f}")
