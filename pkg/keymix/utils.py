from __future__ import annotations

import functools
import hashlib
import os
import tempfile

import orjson

SEED_ENV = 'KEYMIX_SEED'


def load_json(path):
    with open(path, encoding='utf-8') as fil:
        return orjson.loads(fil.read())


def default_seed():
    """Seed used when none is given on the command line.

    Reads KEYMIX_SEED from the environment and falls back to 0.
    """
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == '':
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f'{SEED_ENV} must be an integer, got {raw!r}') from exc


def derive_seed(seed, *labels):
    """Derive a stable 64-bit seed from a master seed and a set of labels.

    Python's hash() is salted per process, so a digest is used instead.

    >>> derive_seed(7, 'u1', 's1') == derive_seed(7, 'u1', 's1')
    True
    >>> derive_seed(7, 'u1', 's1') == derive_seed(7, 'u1', 's2')
    False
    >>> 0 <= derive_seed(0) < 2 ** 64
    True
    """
    text = '\x1f'.join([str(int(seed))] + [str(label) for label in labels])
    digest = hashlib.sha256(text.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big')


def parse_float_list(text):
    """Parse a comma separated list of numbers.

    >>> parse_float_list('0,50,100')
    [0.0, 50.0, 100.0]
    >>> parse_float_list(' 0.5 , 1 ')
    [0.5, 1.0]
    """
    values = []
    for part in text.split(','):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(float(part))
        except ValueError as exc:
            raise ValueError(f'Not a number in list {text!r}: {part!r}') from exc
    if not values:
        raise ValueError(f'Empty list: {text!r}')
    return values


def _umask():
    # reading the umask means setting it
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write(path, data):
    """Write bytes or text to path so readers never observe a partial file."""
    if isinstance(data, str):
        data = data.encode('utf-8')
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.keymix-', suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as fil:
            fil.write(data)
        # mkstemp creates the file owner-only
        os.chmod(tmp_path, 0o666 & ~_umask())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def handle_top_exception(logger):
    """A decorator that will catch exceptions and log the exception's message
    as a CRITICAL log."""
    def decorator(fnc):
        @functools.wraps(fnc)
        def wrapped(*args, **kwargs):
            try:
                return fnc(*args, **kwargs)
            except Exception as exc:
                logger.critical(exc)
                raise
        return wrapped
    return decorator
