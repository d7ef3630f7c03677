import sys

from driven_qubit_entropy.main import main


if __name__ == "__main__":
    sys.exit(main())
