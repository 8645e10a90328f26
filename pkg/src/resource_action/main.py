import sys

from resource_action.cli import main


def run():
    """
    Runs the command-line interface and exits with its status code.
    """
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    # This ensures the run function is called only when the script is executed directly
    run()
