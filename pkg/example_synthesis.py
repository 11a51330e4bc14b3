import os, sys
from dotenv import load_dotenv

from ionscope.hamiltonians import TrapParams, WaveConfig
from ionscope.hilbert import make_joint_space
from ionscope.observables import phase_state_coeffs
from ionscope.propagator import evolve_pulses
from ionscope.pulse_compiler import compile, fidelity

load_dotenv()
ETA  = float(os.getenv("IONSCOPE_ETA", "0.5"))
Q    = float(os.getenv("IONSCOPE_Q", "0.1"))
WAVE = os.getenv("IONSCOPE_WAVE", WaveConfig.STANDING.value)

def synthesize(N: int, phi: float):
    trap = TrapParams(eta=ETA)
    target = phase_state_coeffs(N, phi)
    schedule = compile(target, trap, Q, WAVE)
    space = make_joint_space(N + 8)
    out = evolve_pulses(space.ground(), schedule.pulses(trap), trap)
    return schedule, fidelity(space.embed(target), out), trap

if __name__ == "__main__":
    N = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    phi = float(sys.argv[2]) if len(sys.argv) > 2 else 2.0

    schedule, f, trap = synthesize(N, phi)
    print(f"\n=== Schedule ({len(schedule)} pulses) ===")
    for i, step in enumerate(schedule.steps, 1):
        print(f"[{i}] {step.kind.value:<8} {step.wave.value:<18} omega={step.omega:.5f} phi={step.phi:.4f}  t={step.duration:.2f}")
    print(f"\nfidelity={f:.6f}  nu t/2pi={schedule.nu_t_over_2pi(trap):.1f}")
