from __future__ import annotations

import base64
import binascii
import hashlib
import hmac
import secrets

HASH_SCHEME = "pbkdf2_sha256"
DEFAULT_ITERATIONS = 200_000


def hash_password(
    password: str,
    salt: bytes | None = None,
    iterations: int = DEFAULT_ITERATIONS,
) -> str:
    """Encode as ``pbkdf2_sha256$<iterations>$<salt hex>$<hash hex>``."""
    salt = secrets.token_bytes(16) if salt is None else salt
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return f"{HASH_SCHEME}${iterations}${salt.hex()}${digest.hex()}"


def verify_password(password: str, encoded: str) -> bool:
    try:
        scheme, raw_iterations, salt_hex, digest_hex = encoded.split("$")
        iterations = int(raw_iterations)
        salt = bytes.fromhex(salt_hex)
        expected = bytes.fromhex(digest_hex)
    except ValueError:
        return False
    if scheme != HASH_SCHEME or iterations < 1:
        return False
    candidate = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return hmac.compare_digest(candidate, expected)


def parse_basic_auth(auth_header: str | None) -> tuple[str, str] | None:
    if not auth_header:
        return None
    prefix = "Basic "
    if not auth_header.startswith(prefix):
        return None
    try:
        decoded = base64.b64decode(auth_header[len(prefix) :], validate=True).decode("utf-8")
    except (binascii.Error, UnicodeDecodeError):
        return None
    username, sep, password = decoded.partition(":")
    if not sep:
        return None
    return username, password


def is_valid_basic(auth_header: str | None, username: str, password_hash: str) -> bool:
    credentials = parse_basic_auth(auth_header)
    if credentials is None or not password_hash:
        return False
    given_user, given_password = credentials
    # The password is hashed whether or not the user matches.
    user_ok = hmac.compare_digest(given_user.encode("utf-8"), username.encode("utf-8"))
    password_ok = verify_password(given_password, password_hash)
    return user_ok and password_ok
