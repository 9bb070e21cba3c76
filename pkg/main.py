import sys

from rich.console import Console
from rich.markdown import Markdown

from src.cli.commands import (EXIT_INPUT, cmd_bc, cmd_frechet, cmd_length, cmd_lineint, cmd_verify,
                              run_command)

USAGE = """
# rectify

* `python main.py length SPEC [--tol T] [--max-depth D] [--extrapolate] [--out CSV] [--manifest JSON]`
* `python main.py frechet SPEC_A SPEC_B [--depth D] [--out CSV] [--manifest JSON]`
* `python main.py lineint SPEC [--integrand NAME] [--xi left|mid|right|random] [--tol T] [--max-depth D] [--seed S]`
* `python main.py bc --example ID|bc://example/ID?k=v [--f EXPR] [--curve NAME] [--integrand NAME] [--seed S] [--tol T]`
* `python main.py verify [--suite core|arclen|frechet|integrand|bc|all] [--seed S] [--jobs N] [--out JSON]`

SPEC is a JSON curve spec file, `-` for stdin, or a catalog curve name such as `circle`.
"""

VALUE_FLAGS = ("--tol", "--max-depth", "--depth", "--seed", "--out", "--manifest", "--integrand", "--xi",
               "--example", "--f", "--curve", "--suite", "--jobs")


def flag(name, default=None, cast=str):
  if name in sys.argv:
    idx = sys.argv.index(name) + 1
    if idx < len(sys.argv):
      return cast(sys.argv[idx])
  return default


def positionals():
  args = []
  skip = False
  for arg in sys.argv[2:]:
    if skip:
      skip = False
    elif arg in VALUE_FLAGS:
      skip = True
    elif not arg.startswith("--"):
      args.append(arg)
  return args


def main():
  console = Console(stderr=True)
  if len(sys.argv) < 2 or sys.argv[1] in ("-h", "--help", "help"):
    console.print(Markdown(USAGE))
    return 0

  command = sys.argv[1]
  specs = positionals()
  out = flag("--out")
  manifest = flag("--manifest")
  seed = flag("--seed", 0, int)
  tol = flag("--tol", None, float)

  if command == "length" and len(specs) == 1:
    return run_command(cmd_length, specs[0], tol, flag("--max-depth", None, int), "--extrapolate" in sys.argv,
                       out, manifest)
  if command == "frechet" and len(specs) == 2:
    return run_command(cmd_frechet, specs[0], specs[1], flag("--depth", None, int), out, manifest)
  if command == "lineint" and len(specs) == 1:
    return run_command(cmd_lineint, specs[0], flag("--integrand", "norm"), flag("--xi", "mid"), tol,
                       flag("--max-depth", None, int), seed, out, manifest)
  if command == "bc" and flag("--example"):
    return run_command(cmd_bc, flag("--example"), seed, tol, flag("--f"), flag("--curve"), flag("--integrand"),
                       out, manifest)
  if command == "verify":
    return run_command(cmd_verify, flag("--suite", "all"), seed, flag("--jobs", 1, int), out)

  console.print(f"[bold red]Bad command line:[/] {' '.join(sys.argv[1:])}")
  console.print(Markdown(USAGE))
  return EXIT_INPUT


if __name__ == "__main__":
  sys.exit(main())
