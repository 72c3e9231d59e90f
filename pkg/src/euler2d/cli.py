"""Thin HTTP client driving the scenario service.

The CLI never runs scenarios itself: it parses the local config file,
posts it to the service, prints the returned summary, and maps the error
body to the documented exit codes (2 invalid config, 3 hypothesis
violation, 4 numerical blow-up, 1 transport failure).  By default it
talks to an in-process instance of the app over an ASGI transport, so no
server needs to be running; ``--server URL`` targets a remote instance
(which must share a filesystem for the artifacts to land nearby).
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx

from .errors import InvalidConfig
from .runner import _KEY_ALIASES, parse_config_text


def _request(server: str | None, route: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(route, json=payload)

    from .service import app

    async def _go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service", timeout=None
        ) as client:
            return await client.post(route, json=payload)

    return asyncio.run(_go())


def _load_request(path: str, out: str | None, threads: int | None) -> dict:
    try:
        with open(path) as fh:
            raw = parse_config_text(fh.read())
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    payload = {_KEY_ALIASES.get(k, k): v for k, v in raw.items()}
    if out is not None:
        payload["out"] = out
    if threads is not None:
        payload["threads"] = threads
    return payload


def _post(server: str | None, route: str, payload: dict) -> int:
    try:
        resp = _request(server, route, payload)
    except httpx.HTTPError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 1
    if resp.status_code == 200:
        body = resp.json()
        for line in body.get("summary", []):
            print(line)
        print(f"manifest: {body.get('manifest', '')}")
        return 0
    try:
        body = resp.json()
    except ValueError:
        print(f"service error (HTTP {resp.status_code}): {resp.text}", file=sys.stderr)
        return 1
    detail = body.get("detail", "")
    if isinstance(detail, list):  # pydantic validation errors
        print(f"invalid request: {detail}", file=sys.stderr)
        return 2
    print(f"{body.get('kind', 'error')}: {detail}", file=sys.stderr)
    return int(body.get("exit_code", 1))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="euler2d",
        description="Run vortex-particle scenarios against the euler2d service.",
    )
    parser.add_argument("--server", help="service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory override")
    p_run.add_argument("--threads", type=int, help="worker thread cap")

    p_conv = sub.add_parser("convergence", help="rerun with (n, 1/dt) doubled per level")
    p_conv.add_argument("config")
    p_conv.add_argument("--levels", type=int, required=True)
    p_conv.add_argument("--out", help="output directory override")
    p_conv.add_argument("--threads", type=int, help="worker thread cap")

    args = parser.parse_args(argv)
    try:
        payload = _load_request(args.config, args.out, args.threads)
    except InvalidConfig as exc:
        print(f"invalid_config: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        return _post(args.server, "/run", payload)
    payload["levels"] = args.levels
    return _post(args.server, "/convergence", payload)


if __name__ == "__main__":
    sys.exit(main())
