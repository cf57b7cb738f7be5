"""
Sub-command dispatcher installed as the `mvtlasso` console script.

    mvtlasso {simulate,fit,stability,bench,eval} [options]
"""
import sys

from apps import simulate, fit, stability, bench, evaluate

commands = {
    "simulate": simulate.main,
    "fit": fit.main,
    "stability": stability.main,
    "bench": bench.main,
    "eval": evaluate.main,
}

USAGE = "usage: mvtlasso {{{0}}} [options]\n".format(",".join(commands))

def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        sys.stdout.write(USAGE)
        return 0 if argv else 2
    command = commands.get(argv[0])
    if command is None:
        sys.stderr.write("mvtlasso: unknown command {0!r}\n{1}".format(argv[0], USAGE))
        return 2
    return command(argv[1:])

if __name__ == "__main__":
    sys.exit(main())
