from __future__ import annotations

from fastapi import APIRouter, Depends, Header, HTTPException, Query, Request, status
from fastapi.responses import HTMLResponse, Response

from lavawatch.api.schemas import ErrorResponse, StatusResponse
from lavawatch.api.status_page import render_status_page
from lavawatch.core.auth import is_valid_basic
from lavawatch.core.imaging import encode_png

router = APIRouter()
AUTH_REALM = 'Basic realm="lavawatch"'


def require_basic_auth(
    request: Request,
    authorization: str | None = Header(default=None),
) -> None:
    monitor = request.app.state.container.monitor
    if not is_valid_basic(authorization, monitor.username, monitor.password_hash):
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="invalid or missing credentials",
            headers={"WWW-Authenticate": AUTH_REALM},
        )


@router.get("/healthz")
async def healthz() -> dict[str, str]:
    return {"status": "ok"}


@router.get(
    "/",
    response_class=HTMLResponse,
    dependencies=[Depends(require_basic_auth)],
    responses={401: {"model": ErrorResponse}},
)
async def status_page(request: Request) -> HTMLResponse:
    container = request.app.state.container
    board = container.board
    page = render_status_page(
        container.monitor.page_title,
        board.snapshot(),
        board.recent_events(),
    )
    return HTMLResponse(page)


@router.get(
    "/api/status",
    response_model=StatusResponse,
    dependencies=[Depends(require_basic_auth)],
    responses={401: {"model": ErrorResponse}},
)
async def api_status(request: Request) -> StatusResponse:
    return StatusResponse.from_snapshot(request.app.state.container.board.snapshot())


@router.get(
    "/api/events",
    dependencies=[Depends(require_basic_auth)],
    responses={401: {"model": ErrorResponse}},
)
async def api_events(
    request: Request,
    limit: int | None = Query(default=None, ge=0),
) -> Response:
    # Items are the stored payload bytes, not re-serialized.
    events = request.app.state.container.board.recent_events(limit)
    return Response(content=b"[" + b",".join(events) + b"]", media_type="application/json")


@router.get(
    "/api/frame/latest.png",
    dependencies=[Depends(require_basic_auth)],
    responses={401: {"model": ErrorResponse}, 404: {"model": ErrorResponse}},
)
async def latest_frame(request: Request) -> Response:
    frame = request.app.state.container.board.latest_frame()
    if frame is None:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="no frame yet")
    return Response(content=encode_png(frame), media_type="image/png")
