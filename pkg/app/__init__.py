"""Sequential hypothesis testing by betting: e-value ledgers, betting strategies and simulations."""
