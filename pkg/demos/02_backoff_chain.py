# %% [markdown]
# # The backoff chain and its stationary distribution
#
# Each station is a Markov chain over (backoff stage, counter) plus an
# idle state for an empty queue. The closed form for the attempt
# probability tau is checked here against a brute-force stationary solve
# of the full transition matrix.

# %%
from dcfmodel import markov
from dcfmodel.markov import ChainInputs

for w, m, p, q in [(4, 2, 0.3, 0.7), (8, 3, 0.5, 0.5), (32, 5, 0.2, 0.5), (32, 5, 0.6, 1.0)]:
    c = ChainInputs(w, m, p, q)
    oracle = markov.build_chain_oracle(c)
    print(f"W={w:3d} m={m} P={p:.2f} q={q:.1f}  tau={markov.tau(c):.10f}  "
          f"oracle={markov.oracle_tau(oracle):.10f}  idle mass={max(oracle.b_idle, 0.0):.4f}")

# %% [markdown]
# With no failures and a full queue the chain reduces to a uniform draw
# and countdown, giving tau = 2 / (W + 1).

# %%
print(markov.tau(ChainInputs(32, 5, 0.0, 1.0)), 2 / 33)

# %% [markdown]
# At light load a failure can *raise* tau: a failed frame keeps the
# station backlogged instead of letting it fall into the idle state.

# %%
for p in (0.0, 0.1, 0.2, 0.3):
    print(p, markov.tau(ChainInputs(32, 5, p, 0.01)), markov.tau(ChainInputs(32, 5, p, 1.0)))
