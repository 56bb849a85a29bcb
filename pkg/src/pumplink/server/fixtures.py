"""Seed fixtures: accounts, registered devices, limits, initial indices.

A fixture file makes a server start reproducible; the generator builds
arbitrarily large fleets for load testing (one device account per patient
plus one physician overseeing all of them).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from pumplink.protocol import MacAddress, as_decimal_2dp


@dataclass
class AccountFixture:
    username: str
    password: str
    role: str  # "patient" | "physician"
    first_name: str
    last_name: str
    institution: str
    macs: list[str] = field(default_factory=list)
    patient_id: str | None = None


@dataclass
class PatientFixture:
    patient_id: str
    physician: str
    max_volume_ml: Decimal
    min_rate_ml_h: Decimal
    max_rate_ml_h: Decimal
    initial_volume_ml: Decimal
    initial_rate_ml_h: Decimal


@dataclass
class Fixture:
    accounts: list[AccountFixture]
    patients: list[PatientFixture]

    def to_obj(self) -> dict:
        return {
            "accounts": [
                {
                    "username": a.username,
                    "password": a.password,
                    "role": a.role,
                    "first_name": a.first_name,
                    "last_name": a.last_name,
                    "institution": a.institution,
                    "macs": a.macs,
                    **({"patient_id": a.patient_id} if a.patient_id else {}),
                }
                for a in self.accounts
            ],
            "patients": [
                {
                    "patient_id": p.patient_id,
                    "physician": p.physician,
                    "limits": {
                        "max_volume_ml": float(p.max_volume_ml),
                        "min_rate_ml_h": float(p.min_rate_ml_h),
                        "max_rate_ml_h": float(p.max_rate_ml_h),
                    },
                    "initial_index": {
                        "volume_ml": float(p.initial_volume_ml),
                        "rate_ml_h": float(p.initial_rate_ml_h),
                    },
                }
                for p in self.patients
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_obj(), indent=2) + "\n")

    @classmethod
    def from_obj(cls, obj: dict) -> "Fixture":
        accounts = []
        for a in obj.get("accounts", []):
            fx = AccountFixture(
                username=a["username"],
                password=a["password"],
                role=a["role"],
                first_name=a.get("first_name", ""),
                last_name=a.get("last_name", ""),
                institution=a.get("institution", ""),
                macs=list(a.get("macs", [])),
                patient_id=a.get("patient_id"),
            )
            if fx.role not in ("patient", "physician"):
                raise ValueError(f"account {fx.username}: bad role {fx.role!r}")
            for m in fx.macs:
                MacAddress.parse(m)  # fail fast on sloppy fixtures
            accounts.append(fx)
        patients = []
        for p in obj.get("patients", []):
            limits = p["limits"]
            initial = p["initial_index"]
            patients.append(
                PatientFixture(
                    patient_id=p["patient_id"],
                    physician=p["physician"],
                    max_volume_ml=as_decimal_2dp(limits["max_volume_ml"], "max_volume_ml"),
                    min_rate_ml_h=as_decimal_2dp(limits["min_rate_ml_h"], "min_rate_ml_h"),
                    max_rate_ml_h=as_decimal_2dp(limits["max_rate_ml_h"], "max_rate_ml_h"),
                    initial_volume_ml=as_decimal_2dp(initial["volume_ml"], "volume_ml"),
                    initial_rate_ml_h=as_decimal_2dp(initial["rate_ml_h"], "rate_ml_h"),
                )
            )
        return cls(accounts=accounts, patients=patients)

    @classmethod
    def load(cls, path: str | Path) -> "Fixture":
        return cls.from_obj(json.loads(Path(path).read_text()))


def device_mac(i: int) -> str:
    """Deterministic locally-administered MAC for fleet member i."""
    return MacAddress(bytes((0x02, 0x00, 0x00, 0x00, (i >> 8) & 0xFF, i & 0xFF))).text


CONSOLE_MAC = "CC:00:00:00:00:01"
DEMO_PASSWORD = "demo-password"
PHYSICIAN_USERNAME = "dr-adams"


def make_fixture(
    n_patients: int,
    password: str = DEMO_PASSWORD,
    initial_volume_ml: str = "2.00",
    initial_rate_ml_h: str = "4.00",
) -> Fixture:
    """Fleet fixture: patient001..N with devices, one physician for all."""
    if n_patients < 1:
        raise ValueError("need at least one patient")
    accounts = [
        AccountFixture(
            username=PHYSICIAN_USERNAME,
            password=password,
            role="physician",
            first_name="Ada",
            last_name="Adams",
            institution="Riverside General",
            macs=[CONSOLE_MAC],
        )
    ]
    patients = []
    for i in range(1, n_patients + 1):
        pid = f"p{i:03d}"
        accounts.append(
            AccountFixture(
                username=f"patient{i:03d}",
                password=password,
                role="patient",
                first_name=f"Pat{i:03d}",
                last_name="Martin",
                institution="Riverside General",
                macs=[device_mac(i)],
                patient_id=pid,
            )
        )
        patients.append(
            PatientFixture(
                patient_id=pid,
                physician=PHYSICIAN_USERNAME,
                max_volume_ml=Decimal("10.00"),
                min_rate_ml_h=Decimal("0.10"),
                max_rate_ml_h=Decimal("200.00"),
                initial_volume_ml=Decimal(initial_volume_ml),
                initial_rate_ml_h=Decimal(initial_rate_ml_h),
            )
        )
    return Fixture(accounts=accounts, patients=patients)
