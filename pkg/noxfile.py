from glob import glob
from pathlib import Path

import nox

nox.options.sessions = ["lint", "test"]


@nox.session(python="3.9")
def lint(session: nox.Session) -> None:
    session.install("pre-commit")

    if session.posargs:
        args = session.posargs + ["--all-files"]
    else:
        args = ["--all-files", "--show-diff-on-failure"]

    session.run("pre-commit", "run", *args)


@nox.session(python="3.9")
def test(session: nox.Session) -> None:
    session.install(".[test]")
    session.run("pytest", "--cov=windowsketch", *session.posargs)


@nox.session(python="3.9")
def bench(session: nox.Session) -> None:
    """Replay one stream per sketch family and print the summaries.

    Extra arguments go to every run, e.g. `nox -s bench -- --seed 3`.
    """
    session.install(".")
    out = Path(session.create_tmp())

    runs = {
        "fast-dsfd": ["--synthetic", "20000,64,10", "--normalize"],
        "seq-dsfd": ["--synthetic", "20000,64,10", "--rescale", "--R", "64"],
        "time-dsfd": [
            "--synthetic",
            "20000,64,10",
            "--rescale",
            "--R",
            "64",
            "--poisson",
            "0.5",
        ],
        "lmfd": ["--synthetic", "20000,64,10", "--normalize"],
    }
    for algo, args in runs.items():
        session.run(
            "windowsketch",
            "run",
            "--algo",
            algo,
            "--window",
            "2000",
            "--epsilon",
            "0.1",
            "--query-every",
            "1000",
            "--out",
            str(out / f"{algo}.json"),
            *args,
            *session.posargs,
        )


@nox.session
def build(session: nox.Session) -> None:
    """Build the sdist and wheel into dist/ and check their metadata."""
    session.install("flit", "twine")

    for stale in glob("dist/windowsketch-*"):
        Path(stale).unlink()
    session.run("flit", "build")

    files = glob("dist/windowsketch-*")
    if len(files) != 2:
        session.error(f"Expected an sdist and a wheel, got {files}")
    session.run("twine", "check", *files)
