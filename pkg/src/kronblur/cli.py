"""Command-line client for the deblurring service.

Every command is a thin client: files are read and written locally,
numerics run in the service. Without ``--server`` the service runs
in-process over an ASGI transport, so no daemon is needed; with it,
the same requests go over HTTP.

File conventions: images are PGM (P5 by default, ``--ascii`` for P2),
PSFs and restored outputs use the plain matrix text format, which is
bit-exact. ``blur`` writes a ``<out>.meta`` sidecar recording the
noise settings so ``restore --lambda auto`` can find the noise level.

Exit codes: 0 success, 2 argument error, 3 format error, 4 numeric
error; any failure prints a single diagnostic line to stderr and
removes output files this invocation had already written.
"""

from __future__ import annotations

import asyncio
import os
import sys

import click
import httpx

from . import __version__
from .errors import ArgumentError, FormatError, KronblurError, NumericError
from .imaging import read_image, read_psf, write_image, write_matrix, write_psf
from .pipeline import parse_suite, rows_to_csv
from .psf import Psf
from .solvers import IterationRecord, write_history_csv

EXIT_CODES = {"argument": 2, "format": 3, "numeric": 4}
BC_CHOICE = click.Choice(["zero", "reflective"])


class ServiceError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind if kind in EXIT_CODES else "numeric"


class Client:
    """POSTs JSON to the service, in-process unless a server URL is set."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None
        if self.server is None:
            from .service.app import create_app

            self._transport = httpx.ASGITransport(app=create_app())

    async def _post_asgi(self, path: str, payload: dict) -> httpx.Response:
        async with httpx.AsyncClient(
            transport=self._transport, base_url="http://kronblur", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    def post(self, path: str, payload: dict) -> dict:
        try:
            if self.server is None:
                response = asyncio.run(self._post_asgi(path, payload))
            else:
                response = httpx.post(self.server + path, json=payload, timeout=600.0)
        except httpx.HTTPError as exc:
            raise ServiceError("numeric", f"service unreachable: {exc}") from exc
        if response.status_code >= 400:
            try:
                envelope = response.json()["error"]
                raise ServiceError(envelope["type"], envelope["message"])
            except (ValueError, KeyError, TypeError):
                raise ServiceError(
                    "numeric", f"unexpected service response {response.status_code}"
                ) from None
        return response.json()


class CommandRun:
    """Tracks written outputs so failures can clean up partial results."""

    def __init__(self):
        self.written: list[str] = []

    def write(self, path: str, writer) -> None:
        writer(path)
        self.written.append(path)

    def cleanup(self) -> None:
        for path in self.written:
            try:
                os.unlink(path)
            except OSError:
                pass


def _fail(run: CommandRun, kind: str, message: str) -> None:
    run.cleanup()
    click.echo(f"error ({kind}): {message}", err=True)
    sys.exit(EXIT_CODES.get(kind, 4))


def guarded(fn):
    """Map domain/service errors to the exit-code contract."""

    def wrapper(*args, **kwargs):
        run = CommandRun()
        try:
            return fn(run, *args, **kwargs)
        except ServiceError as exc:
            _fail(run, exc.kind, str(exc))
        except FormatError as exc:
            _fail(run, "format", str(exc))
        except ArgumentError as exc:
            _fail(run, "argument", str(exc))
        except NumericError as exc:
            _fail(run, "numeric", str(exc))
        except KronblurError as exc:  # pragma: no cover - base fallback
            _fail(run, "numeric", str(exc))
        except OSError as exc:
            _fail(run, "argument", str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _psf_payload(psf: Psf) -> dict:
    return {"values": psf.values.tolist(), "center": list(psf.center)}


def _parse_terms(s: str) -> int | None:
    if s == "full":
        return None
    try:
        value = int(s)
    except ValueError:
        raise ArgumentError(f"-s expects an integer or 'full', got {s!r}") from None
    if value < 1:
        raise ArgumentError(f"-s must be >= 1, got {value}")
    return value


def _parse_lambda(text: str) -> float | None:
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise ArgumentError(f"--lambda expects a number or 'auto', got {text!r}") from None
    if not value > 0:
        raise ArgumentError(f"--lambda must be positive, got {value}")
    return value


def _read_sidecar_level(blurred_path: str) -> float | None:
    meta = blurred_path + ".meta"
    if not os.path.exists(meta):
        return None
    with open(meta) as fh:
        for lineno, line in enumerate(fh, 1):
            # key + remainder, so path values may contain spaces
            parts = line.split(maxsplit=1)
            if not parts:
                continue
            if len(parts) != 2:
                raise FormatError(f"{meta}:{lineno}: expected 'key value'")
            if parts[0] == "noise_level":
                try:
                    return float(parts[1])
                except ValueError:
                    raise FormatError(f"{meta}:{lineno}: bad noise_level {parts[1].strip()!r}") from None
    return None


@click.group()
@click.version_option(__version__)
@click.option(
    "--server",
    envvar="KRONBLUR_SERVER",
    default=None,
    help="Service URL; omit to run the service in-process.",
)
@click.pass_context
def main(ctx, server):
    """Structured deblurring: Kronecker operators, FISTA/sFISTA solvers.

    BlurLevel mapping used by bench suites (scaled with image size,
    reference 64x64): defocus radius mild=2 medium=4 severe=8; shake
    walk steps mild=10 medium=30 severe=80.
    """
    ctx.obj = Client(server)


@main.command("gen-image")
@click.option("--kind", required=True, help="pattern1|pattern2|ppower|smooth|dot2|dotk|delta")
@click.option("--size", default=64, show_default=True, help="Square image side (>= 8).")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--ascii", "ascii_", is_flag=True, help="Write P2 instead of P5.")
@click.pass_obj
@guarded
def gen_image(run: CommandRun, client: Client, kind, size, seed, out, ascii_):
    """Generate a test image and write it as PGM."""
    reply = client.post("/generate/image", {"kind": kind, "m": size, "n": size, "seed": seed})
    import numpy as np

    run.write(out, lambda p: write_image(p, np.array(reply["image"]), binary=not ascii_))
    click.echo(f"wrote {out}")


@main.command("gen-psf")
@click.option("--kind", required=True, type=click.Choice(["gaussian", "disk", "shake"]))
@click.option("--size", default=5, show_default=True, help="Odd kernel side >= 3.")
@click.option("--sigma", default=1.0, show_default=True, help="Gaussian spread (pixels).")
@click.option("--radius", default=2.0, show_default=True, help="Disk radius (pixels).")
@click.option("--steps", default=30, show_default=True, help="Shake walk length.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
@guarded
def gen_psf(run: CommandRun, client: Client, kind, size, sigma, radius, steps, seed, out):
    """Generate a PSF and write it in the matrix format with its center."""
    reply = client.post(
        "/generate/psf",
        {"kind": kind, "size": size, "sigma": sigma, "radius": radius, "steps": steps, "seed": seed},
    )
    psf = Psf(reply["values"], tuple(reply["center"]))
    run.write(out, lambda p: write_psf(p, psf))
    click.echo(f"wrote {out}")


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--psf", "psf_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bc", default="reflective", show_default=True, type=BC_CHOICE)
@click.option(
    "--noise",
    default="none",
    show_default=True,
    type=click.Choice(["none", "gauss", "laplace", "multiplicative"]),
)
@click.option("--noise-level", default=0.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--ascii", "ascii_", is_flag=True, help="Write P2 instead of P5.")
@click.pass_obj
@guarded
def blur(run: CommandRun, client: Client, image_path, psf_path, bc, noise, noise_level, seed, out, ascii_):
    """Blur an image, optionally add noise; writes PGM plus a sidecar."""
    import numpy as np

    image = read_image(image_path)
    psf = read_psf(psf_path)
    reply = client.post(
        "/blur",
        {
            "image": image.tolist(),
            "psf": _psf_payload(psf),
            "bc": bc,
            "noise": noise,
            "noise_level": noise_level,
            "seed": seed,
        },
    )
    run.write(out, lambda p: write_image(p, np.array(reply["blurred"]), binary=not ascii_))
    meta = "\n".join(
        [
            f"source {image_path}",
            f"psf {psf_path}",
            f"bc {bc}",
            f"noise {noise}",
            f"noise_level {noise_level if noise != 'none' else 0.0:.17g}",
            f"seed {seed}",
        ]
    )

    def write_meta(p):
        with open(p, "w") as fh:
            fh.write(meta + "\n")

    run.write(out + ".meta", write_meta)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--psf", "psf_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bc", default="reflective", show_default=True, type=BC_CHOICE)
@click.option("-s", "--terms", default="full", show_default=True, help="Term count or 'full'.")
@click.option("--size", default=None, type=int, help="Pad the PSF to this square size first.")
@click.option("--report", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
@guarded
def decompose(run: CommandRun, client: Client, psf_path, bc, terms, size, report):
    """Write the singular-value / truncation-error table of a PSF."""
    psf = read_psf(psf_path)
    payload = {"psf": _psf_payload(psf), "bc": bc, "s": _parse_terms(terms)}
    if size is not None:
        payload["shape"] = [size, size]
    reply = client.post("/decompose", payload)

    def write_report(p):
        with open(p, "w") as fh:
            fh.write(f"# decomposition report: bc={bc} rank={reply['rank']} s={reply['s']}\n")
            fh.write("i sigma eps\n")
            for i, (sig, eps) in enumerate(zip(reply["sigma"], reply["eps"]), 1):
                fh.write(f"{i} {sig:.17g} {eps:.17g}\n")

    run.write(report, write_report)
    click.echo(f"wrote {report}")


@main.command()
@click.option("--blurred", "blurred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--psf", "psf_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bc", default="reflective", show_default=True, type=BC_CHOICE)
@click.option("--method", default="sfista", show_default=True, type=click.Choice(["fista", "sfista"]))
@click.option("-s", "--terms", default="full", show_default=True, help="sfista term count or 'full'.")
@click.option("--lambda", "lam", default="auto", show_default=True, help="Regularization weight or 'auto'.")
@click.option("--iters", default=50, show_default=True)
@click.option("--tol", default=0.0, show_default=True, help="Relative-change stop (0 = run all iters).")
@click.option("--truth", "truth_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--noise-level", default=None, type=float, help="Noise level for --lambda auto (else sidecar).")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--metrics-csv", "metrics_csv", default=None, type=click.Path(dir_okay=False))
@click.pass_obj
@guarded
def restore(
    run: CommandRun,
    client: Client,
    blurred_path,
    psf_path,
    bc,
    method,
    terms,
    lam,
    iters,
    tol,
    truth_path,
    noise_level,
    seed,
    out,
    metrics_csv,
):
    """Deblur an image; the output is written in the matrix format.

    fista always uses the untruncated (exact) operator; -s applies to
    sfista. With --lambda auto the noise level comes from
    --noise-level or the blurred file's sidecar.
    """
    import numpy as np

    blurred = read_image(blurred_path)
    psf = read_psf(psf_path)
    lam_value = _parse_lambda(lam)
    if lam_value is None and noise_level is None:
        noise_level = _read_sidecar_level(blurred_path)
        if noise_level is None:
            raise ArgumentError(
                "--lambda auto needs --noise-level or a sidecar next to the blurred file"
            )
    payload = {
        "blurred": blurred.tolist(),
        "psf": _psf_payload(psf),
        "bc": bc,
        "method": method,
        "s": _parse_terms(terms),
        "lam": lam_value,
        "iters": iters,
        "tol": tol,
        "noise_level": noise_level,
        "seed": seed,
        "record_history": metrics_csv is not None,
    }
    if truth_path is not None:
        payload["truth"] = read_image(truth_path).tolist()
    reply = client.post("/restore", payload)
    run.write(out, lambda p: write_matrix(p, np.array(reply["restored"])))
    if metrics_csv is not None:
        history = [
            IterationRecord(
                k=row["iter"],
                t=row["t"],
                objective=row["objective"],
                eta=row["eta"],
                gamma=row["gamma"],
                ms=row["ms"],
            )
            for row in reply["history"]
        ]
        run.write(metrics_csv, lambda p: write_history_csv(history, p))
    eta = "n/a" if reply["eta"] is None else f"{reply['eta']:.6g}"
    click.echo(
        f"wrote {out} (method={reply['method']} s={reply['s']} lambda={reply['lambda_used']:.6g} "
        f"iters={reply['iterations']} eta={eta} gamma={reply['gamma']:.6g})"
    )


@main.command()
@click.option("--suite", "suite_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_obj
@guarded
def bench(run: CommandRun, client: Client, suite_path, out_dir):
    """Run a benchmark suite and write <out-dir>/bench.csv."""
    with open(suite_path) as fh:
        cases = parse_suite(fh.read())
    os.makedirs(out_dir, exist_ok=True)
    rows: list[dict] = []
    for case in cases:
        reply = client.post(
            "/bench/case",
            {
                "id": case.id,
                "image": case.image,
                "blur": case.blur,
                "level": case.level,
                "noise": case.noise,
                "noise_level": case.noise_level,
                "s": list(case.s_list),
                "iters": case.iters,
                "seeds": list(case.seeds),
                "size": case.size,
                "bc": case.bc,
                "lam": case.lam,
            },
        )
        rows.extend(reply["rows"])
    csv_path = os.path.join(out_dir, "bench.csv")

    def write_csv(p):
        with open(p, "w") as fh:
            fh.write(rows_to_csv(rows))

    run.write(csv_path, write_csv)
    click.echo(f"wrote {csv_path} ({len(rows)} rows)")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8751, show_default=True)
def serve(host, port):
    """Run the HTTP service under uvicorn."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
