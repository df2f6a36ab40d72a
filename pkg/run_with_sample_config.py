import os
import sys

import uvicorn

from app.utils.config import load_config
from app.utils.logging_setup import configure_logging
from app.utils.simulation import solve_scenario

SAMPLE_CONFIG = os.path.join("configs", "growth_bounded2_mu03.json")


def main():
    configure_logging(os.getenv("BETTING_LOG_LEVEL", "INFO"))

    # Check the sample scenario solves before serving
    if os.path.exists(SAMPLE_CONFIG):
        print(f"Solving sample scenario {SAMPLE_CONFIG}...")
        report = solve_scenario(load_config(SAMPLE_CONFIG)).oracle_report()
        print(f"lambda*={report['lambda_star']:.6g} ell*={report['ell_star']:.6g}")

    # Run the application
    print("Starting the application...")
    uvicorn.run("app.api.main:app", host="0.0.0.0", port=8000, reload="--reload" in sys.argv)


if __name__ == "__main__":
    main()
