import os, sys
from dotenv import load_dotenv

from ionscope.measurement import ProtocolMode, run_trials
from ionscope.observables import StateRecipe, born_distribution, position_basis

load_dotenv()
TRIALS = int(os.getenv("IONSCOPE_TRIALS", "10000"))
SEED   = int(os.getenv("IONSCOPE_SEED", "7"))
JOBS   = int(os.getenv("IONSCOPE_JOBS", "1"))

def histogram(alpha: float, N: int):
    recipe, basis = StateRecipe.cat(alpha, N), position_basis(N)
    result = run_trials(recipe, basis, ProtocolMode.ideal(), TRIALS, SEED, jobs=JOBS)
    return basis, result.counts, born_distribution(recipe.coeffs(), basis)

if __name__ == "__main__":
    alpha = float(sys.argv[1]) if len(sys.argv) > 1 else 1.5
    N = int(sys.argv[2]) if len(sys.argv) > 2 else 32

    basis, counts, ideal = histogram(alpha, N)
    print(f"\n=== Position histogram, cat alpha={alpha}, {TRIALS} trials ===")
    for a, c, p in zip(basis.eigenvalues, counts, ideal):
        bar = "#" * int(round(60 * c / TRIALS / max(ideal.max(), 1e-12)))
        print(f"{a:+7.3f} {c:6d} {p * TRIALS:9.1f} {bar}")
