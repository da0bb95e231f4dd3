"""Prime-field arithmetic and univariate polynomial helpers.

Field elements are plain ints reduced into [0, q); a Field object carries the
modulus and the operations, so values stay cheap to pass around and compare.
The default modulus is the Mersenne prime 2^61 - 1. Schemes that need a
larger field (to keep an integer identity exact, or to shrink a soundness
error) ask for the next prime past their bound.
"""

M61 = (1 << 61) - 1

# Miller-Rabin with this witness set is deterministic for all n < 3.317e24,
# which covers every modulus this package constructs.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    if n <= 2:
        return 2
    c = n | 1
    while not is_prime(c):
        c += 2
    return c


class Field:
    """GF(q) for prime q. Elements are ints in [0, q)."""

    __slots__ = ("q", "bits")

    def __init__(self, q: int):
        if not is_prime(q):
            raise ValueError(f"modulus {q} is not prime")
        self.q = q
        self.bits = q.bit_length()

    def add(self, a, b):
        s = a + b
        q = self.q
        return s - q if s >= q else s

    def sub(self, a, b):
        s = a - b
        return s + self.q if s < 0 else s

    def mul(self, a, b):
        return a * b % self.q

    def neg(self, a):
        return self.q - a if a else 0

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, self.q - 2, self.q)

    def enc(self, x: int) -> int:
        """Map a signed integer into the field."""
        return x % self.q

    def dec_signed(self, v: int) -> int:
        """Decode assuming the represented integer has magnitude < q/2."""
        return v if v <= self.q // 2 else v - self.q

    def rand(self, rng) -> int:
        return rng.randrange(self.q)

    def __eq__(self, other):
        return isinstance(other, Field) and other.q == self.q

    def __hash__(self):
        return hash(("Field", self.q))

    def __repr__(self):
        return f"Field({self.q})"


DEFAULT_FIELD = Field(M61)


def make_field(min_size: int) -> Field:
    """Field with the smallest prime modulus >= min_size."""
    if min_size < 2:
        raise ValueError("min_size must be >= 2")
    return Field(next_prime(min_size))


def field_at_least(min_q: int) -> Field:
    """Default field, or a larger prime one when min_q exceeds 2^61 - 1.

    Oversized moduli are rounded up to the next prime past a power of two so
    that repeated runs with nearby bounds share a field (and the caches keyed
    by it).
    """
    if min_q <= M61:
        return DEFAULT_FIELD
    return Field(next_prime(1 << (min_q - 1).bit_length()))


def random_element(field: Field, rng) -> int:
    """Uniform element of the field from the given RNG."""
    return field.rand(rng)


# -- univariate polynomials, coefficient lists ordered lowest degree first --


def poly_canon(field, coeffs):
    """Canonical form: reduced coefficients, no trailing zeros."""
    out = [c % field.q for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return out


def eval_poly(field, coeffs, x):
    """Horner evaluation of p(x)."""
    acc = 0
    q = field.q
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


def interpolate(field, points):
    """Unique polynomial of degree < len(points) through the given (x, y) pairs.

    Newton divided differences, then expansion to the monomial basis.
    Raises on duplicate x coordinates.
    """
    xs = [field.enc(x) for x, _ in points]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate interpolation points")
    q = field.q
    d = [field.enc(y) for _, y in points]
    n = len(points)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            num = (d[i] - d[i - 1]) % q
            den = (xs[i] - xs[i - j]) % q
            d[i] = num * pow(den, q - 2, q) % q
    coeffs = [0] * n
    basis = [1]  # running product (X - x_0)...(X - x_{i-1})
    for i in range(n):
        ci = d[i]
        for k in range(len(basis)):
            coeffs[k] = (coeffs[k] + ci * basis[k]) % q
        if i + 1 < n:
            nb = [0] * (len(basis) + 1)
            for k, b in enumerate(basis):
                nb[k] = (nb[k] - b * xs[i]) % q
                nb[k + 1] = (nb[k + 1] + b) % q
            basis = nb
    return poly_canon(field, coeffs)


def batch_inverse(field, values):
    """Inverses of all values with one modular exponentiation (values nonzero)."""
    q = field.q
    n = len(values)
    prefix = [1] * (n + 1)
    for i, v in enumerate(values):
        prefix[i + 1] = prefix[i] * v % q
    inv_all = pow(prefix[n], q - 2, q)
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = prefix[i] * inv_all % q
        inv_all = inv_all * values[i] % q
    return out


_INVFACT_CACHE: dict = {}


def _invfacts(field, c):
    """[1/0!, 1/1!, ..., 1/(c-1)!] mod q, cached per (q, c)."""
    key = (field.q, c)
    hit = _INVFACT_CACHE.get(key)
    if hit is not None:
        return hit
    q = field.q
    fact = 1
    facts = [1] * c
    for i in range(1, c):
        fact = fact * i % q
        facts[i] = fact
    inv = pow(facts[-1], q - 2, q)
    out = [1] * c
    for i in range(c - 1, 0, -1):
        out[i] = inv
        inv = inv * i % q
    if len(_INVFACT_CACHE) > 64:
        _INVFACT_CACHE.clear()
    _INVFACT_CACHE[key] = out
    return out


def lagrange_row(field, c, r):
    """[L_x(r) for x in 0..c-1] over the domain {0, ..., c-1}, in O(c).

    Division-free numerators via prefix/suffix products, so r landing on a
    domain point needs no special casing.
    """
    if c > field.q:
        raise ValueError("domain does not embed in the field")
    q = field.q
    r = r % q
    pref = [1] * (c + 1)
    for x in range(c):
        pref[x + 1] = pref[x] * ((r - x) % q) % q
    suf = [1] * (c + 1)
    for x in range(c - 1, -1, -1):
        suf[x] = suf[x + 1] * ((r - x) % q) % q
    invf = _invfacts(field, c)
    out = [0] * c
    for x in range(c):
        v = pref[x] * suf[x + 1] % q * invf[x] % q * invf[c - 1 - x] % q
        if (c - 1 - x) & 1:
            v = q - v if v else 0
        out[x] = v
    return out


def lagrange_basis_at(field, c, x, r):
    """L_x(r) for the basis over {0, ..., c-1}; errors if the domain exceeds q."""
    if not 0 <= x < c:
        raise ValueError("basis index outside domain")
    if c >= field.q:
        raise ValueError("domain does not embed in the field")
    q = field.q
    r = r % q
    num = 1
    den = 1
    for t in range(c):
        if t == x:
            continue
        num = num * ((r - t) % q) % q
        den = den * ((x - t) % q) % q
    return num * pow(den, q - 2, q) % q


def eval_values_at(field, values, x):
    """Evaluate the degree < len(values) polynomial given by its values on
    {0, 1, ..., len(values)-1} at an arbitrary field point."""
    s = len(values)
    x = x % field.q
    if x < s:
        return values[x]
    row = lagrange_row(field, s, x)
    q = field.q
    acc = 0
    for w, v in zip(row, values):
        if v:
            acc += w * v
    return acc % q
