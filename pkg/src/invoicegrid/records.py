"""Synthesis of invoice content: names, dates, line items, totals.

All money is integer cents until the moment a string is rendered, so the
arithmetic invariants (item amount = quantity x unit price, total = sum of
item amounts) hold exactly.
"""

from __future__ import annotations

import datetime
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .annotations import FieldLabel

MAX_LINE_ITEMS = 8


@dataclass(frozen=True)
class LineItem:
    name: str
    quantity: int
    unit_price_cents: int
    amount_cents: int

    def __post_init__(self) -> None:
        if self.quantity <= 0:
            raise ValueError(f"quantity must be positive, got {self.quantity}")
        if self.unit_price_cents <= 0:
            raise ValueError(f"unit price must be positive, got {self.unit_price_cents}")
        if self.amount_cents != self.quantity * self.unit_price_cents:
            raise ValueError(
                f"amount {self.amount_cents} != {self.quantity} * {self.unit_price_cents}"
            )


@dataclass(frozen=True)
class InvoiceRecord:
    company_name: str
    company_address: tuple[str, ...]  # 2-3 lines
    invoice_number: str
    invoice_date: str  # DD.MM.YYYY
    line_items: tuple[LineItem, ...]
    invoice_amount_cents: int
    currency_symbol: str = "€"

    def __post_init__(self) -> None:
        if not 2 <= len(self.company_address) <= 3:
            raise ValueError(f"address must have 2-3 lines, got {len(self.company_address)}")
        if not 1 <= len(self.line_items) <= MAX_LINE_ITEMS:
            raise ValueError(f"need 1-{MAX_LINE_ITEMS} line items, got {len(self.line_items)}")
        if len(self.currency_symbol) != 1:
            raise ValueError(f"currency symbol must be one character: {self.currency_symbol!r}")
        total = sum(it.amount_cents for it in self.line_items)
        if self.invoice_amount_cents != total:
            raise ValueError(f"invoice amount {self.invoice_amount_cents} != item sum {total}")
        if not _is_invoice_number(self.invoice_number):
            raise ValueError(f"invoice number must match INV-[0-9]{{6}}: {self.invoice_number!r}")


def _is_invoice_number(s: str) -> bool:
    return len(s) == 10 and s.startswith("INV-") and s[4:].isdigit()


@dataclass(frozen=True)
class Lexicons:
    """Word lists the synthesizer draws from. All four must be non-empty."""

    companies: tuple[str, ...]
    streets: tuple[str, ...]
    cities: tuple[str, ...]
    products: tuple[str, ...]

    def __post_init__(self) -> None:
        for name in ("companies", "streets", "cities", "products"):
            if not getattr(self, name):
                raise ValueError(f"lexicon {name!r} is empty")


def load_lexicon(path: Path | str) -> tuple[str, ...]:
    """One entry per line, UTF-8; blank lines and `#` comments are skipped."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    if not entries:
        raise ValueError(f"lexicon file {path} has no entries")
    return tuple(entries)


def load_lexicons(directory: Path | str) -> Lexicons:
    d = Path(directory)
    return Lexicons(
        companies=load_lexicon(d / "companies.txt"),
        streets=load_lexicon(d / "streets.txt"),
        cities=load_lexicon(d / "cities.txt"),
        products=load_lexicon(d / "products.txt"),
    )


def default_lexicons() -> Lexicons:
    with resources.as_file(resources.files("invoicegrid") / "data" / "lexicons") as d:
        return load_lexicons(d)


def format_amount(cents: int, symbol: str = "€") -> str:
    """Comma decimal separator, trailing space-separated currency character."""
    if cents < 0:
        raise ValueError(f"amount must be non-negative, got {cents}")
    return f"{cents // 100},{cents % 100:02d} {symbol}"


_DATE_LO = datetime.date(2018, 1, 1).toordinal()
_DATE_HI = datetime.date(2023, 12, 31).toordinal()


def synth_record(seed: int, lexicons: Lexicons) -> InvoiceRecord:
    """Draw one invoice. Pure in (seed, lexicons); no ambient state."""
    rng = random.Random(seed)
    company = rng.choice(lexicons.companies)

    lines = [f"{rng.choice(lexicons.streets)} {rng.randint(1, 199)}"]
    if rng.random() < 1 / 3:
        lines.append(f"Postfach {rng.randint(1000, 9999)}")
    lines.append(f"{rng.randint(10000, 99999)} {rng.choice(lexicons.cities)}")

    number = f"INV-{rng.randint(0, 999999):06d}"
    day = datetime.date.fromordinal(rng.randint(_DATE_LO, _DATE_HI))
    date = f"{day.day:02d}.{day.month:02d}.{day.year:04d}"

    items = []
    for _ in range(rng.randint(1, MAX_LINE_ITEMS)):
        quantity = rng.randint(1, 25)
        unit = rng.randint(99, 49999)
        items.append(
            LineItem(
                name=rng.choice(lexicons.products),
                quantity=quantity,
                unit_price_cents=unit,
                amount_cents=quantity * unit,
            )
        )

    return InvoiceRecord(
        company_name=company,
        company_address=tuple(lines),
        invoice_number=number,
        invoice_date=date,
        line_items=tuple(items),
        invoice_amount_cents=sum(it.amount_cents for it in items),
    )


def record_to_field_values(record: InvoiceRecord) -> dict[FieldLabel, list[str]]:
    """Field values as they appear on the page, one list entry per occurrence.

    Multi-line address collapses to a single space-joined value because field
    values are always compared word-by-word in reading order.
    """
    sym = record.currency_symbol
    return {
        FieldLabel.COMPANY_NAME: [record.company_name],
        FieldLabel.COMPANY_ADDRESS: [" ".join(record.company_address)],
        FieldLabel.INVOICE_NUMBER: [record.invoice_number],
        FieldLabel.INVOICE_AMOUNT: [format_amount(record.invoice_amount_cents, sym)],
        FieldLabel.INVOICE_DATE: [record.invoice_date],
        FieldLabel.ITEM_NAME: [it.name for it in record.line_items],
        FieldLabel.ITEM_QUANTITY: [str(it.quantity) for it in record.line_items],
        FieldLabel.ITEM_AMOUNT: [
            format_amount(it.amount_cents, sym) for it in record.line_items
        ],
    }


def record_to_dict(record: InvoiceRecord) -> dict:
    return {
        "company_name": record.company_name,
        "company_address": list(record.company_address),
        "invoice_number": record.invoice_number,
        "invoice_date": record.invoice_date,
        "line_items": [
            {
                "name": it.name,
                "quantity": it.quantity,
                "unit_price_cents": it.unit_price_cents,
                "amount_cents": it.amount_cents,
            }
            for it in record.line_items
        ],
        "invoice_amount_cents": record.invoice_amount_cents,
        "currency_symbol": record.currency_symbol,
    }


def record_from_dict(data: dict) -> InvoiceRecord:
    return InvoiceRecord(
        company_name=data["company_name"],
        company_address=tuple(data["company_address"]),
        invoice_number=data["invoice_number"],
        invoice_date=data["invoice_date"],
        line_items=tuple(
            LineItem(
                name=it["name"],
                quantity=int(it["quantity"]),
                unit_price_cents=int(it["unit_price_cents"]),
                amount_cents=int(it["amount_cents"]),
            )
            for it in data["line_items"]
        ),
        invoice_amount_cents=int(data["invoice_amount_cents"]),
        currency_symbol=data["currency_symbol"],
    )
