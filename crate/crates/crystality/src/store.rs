//! Byte-addressed storage with attached name and type spaces.
//!
//! A [`ByteStore`] is a sparse map from addresses to bytes together with a
//! name space (identifier -> address) and a type space (identifier -> type).
//! It backs every storage partition in the system: per-address stores,
//! per-engine stores, the global store and memory-stack layers.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeMap, SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The closed set of variable types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeName {
    #[serde(rename = "uint256")]
    UInt256,
    Bool,
    Address,
}

impl TypeName {
    pub fn keyword(self) -> &'static str {
        match self {
            TypeName::UInt256 => "uint256",
            TypeName::Bool => "bool",
            TypeName::Address => "address",
        }
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Byte width of each type: uint256 is 32 bytes, bool is one byte and an
/// address is two big-endian u64 fields (engine, address index).
pub fn size_of(t: TypeName) -> u64 {
    match t {
        TypeName::UInt256 => 32,
        TypeName::Bool => 1,
        TypeName::Address => 16,
    }
}

/// Initial value written when a variable of type `t` is declared.
pub fn init_value(t: TypeName) -> TypedValue {
    match t {
        TypeName::UInt256 => TypedValue::UInt256(U256::zero()),
        TypeName::Bool => TypedValue::Bool(false),
        TypeName::Address => TypedValue::Address(AddressValue::sentinel()),
    }
}

/// Unsigned 256-bit integer with checked arithmetic.
///
/// The wrapped value is always `< 2^256`; constructors enforce the bound.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct U256(BigUint);

impl U256 {
    pub fn zero() -> Self {
        U256(BigUint::zero())
    }

    pub fn from_u64(v: u64) -> Self {
        U256(BigUint::from(v))
    }

    /// Parse a decimal string; `None` if malformed or `>= 2^256`.
    pub fn from_dec_str(s: &str) -> Option<Self> {
        let v = BigUint::parse_bytes(s.as_bytes(), 10)?;
        if v.bits() > 256 {
            return None;
        }
        Some(U256(v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn checked_add(&self, rhs: &U256) -> Option<U256> {
        let sum = &self.0 + &rhs.0;
        if sum.bits() > 256 {
            None
        } else {
            Some(U256(sum))
        }
    }

    pub fn checked_sub(&self, rhs: &U256) -> Option<U256> {
        if self.0 < rhs.0 {
            None
        } else {
            Some(U256(&self.0 - &rhs.0))
        }
    }

    pub fn checked_mul(&self, rhs: &U256) -> Option<U256> {
        let prod = &self.0 * &rhs.0;
        if prod.bits() > 256 {
            None
        } else {
            Some(U256(prod))
        }
    }

    /// Integer division; `None` on division by zero.
    pub fn checked_div(&self, rhs: &U256) -> Option<U256> {
        if rhs.0.is_zero() {
            None
        } else {
            Some(U256(&self.0 / &rhs.0))
        }
    }

    pub fn to_be_bytes(&self) -> [u8; 32] {
        let raw = self.0.to_bytes_be();
        let mut out = [0u8; 32];
        out[32 - raw.len()..].copy_from_slice(&raw);
        out
    }

    pub fn from_be_bytes(bytes: &[u8; 32]) -> Self {
        U256(BigUint::from_bytes_be(bytes))
    }
}

impl fmt::Display for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for U256 {
    fn from(v: u64) -> Self {
        U256::from_u64(v)
    }
}

/// A ledger address: the `j`-th address slot of the `r`-th engine.
///
/// Valid coordinates are 1-based; `(0, 0)` is the invalid sentinel that
/// `init` produces for address-typed variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AddressValue {
    pub engine: u64,
    pub addr: u64,
}

impl AddressValue {
    pub fn new(engine: u64, addr: u64) -> Self {
        AddressValue { engine, addr }
    }

    pub fn sentinel() -> Self {
        AddressValue { engine: 0, addr: 0 }
    }

    pub fn is_valid(&self, n: u64, k: u64) -> bool {
        (1..=n).contains(&self.engine) && (1..=k).contains(&self.addr)
    }
}

impl fmt::Display for AddressValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.engine, self.addr)
    }
}

/// A runtime value tagged with its type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypedValue {
    UInt256(U256),
    Bool(bool),
    Address(AddressValue),
}

impl TypedValue {
    pub fn uint(v: u64) -> Self {
        TypedValue::UInt256(U256::from_u64(v))
    }

    pub fn type_name(&self) -> TypeName {
        match self {
            TypedValue::UInt256(_) => TypeName::UInt256,
            TypedValue::Bool(_) => TypeName::Bool,
            TypedValue::Address(_) => TypeName::Address,
        }
    }

    /// Fixed-width big-endian encoding; length is `size_of(self.type_name())`.
    pub fn encode(&self) -> Vec<u8> {
        match self {
            TypedValue::UInt256(v) => v.to_be_bytes().to_vec(),
            TypedValue::Bool(b) => vec![u8::from(*b)],
            TypedValue::Address(a) => {
                let mut out = Vec::with_capacity(16);
                out.extend_from_slice(&a.engine.to_be_bytes());
                out.extend_from_slice(&a.addr.to_be_bytes());
                out
            }
        }
    }

    /// Decode `bytes` (of length `size_of(t)`) as a value of type `t`.
    pub fn decode(t: TypeName, bytes: &[u8]) -> TypedValue {
        debug_assert_eq!(bytes.len() as u64, size_of(t));
        match t {
            TypeName::UInt256 => {
                let mut buf = [0u8; 32];
                buf.copy_from_slice(bytes);
                TypedValue::UInt256(U256::from_be_bytes(&buf))
            }
            TypeName::Bool => TypedValue::Bool(bytes[0] != 0),
            TypeName::Address => {
                let mut eng = [0u8; 8];
                let mut adr = [0u8; 8];
                eng.copy_from_slice(&bytes[..8]);
                adr.copy_from_slice(&bytes[8..]);
                TypedValue::Address(AddressValue::new(
                    u64::from_be_bytes(eng),
                    u64::from_be_bytes(adr),
                ))
            }
        }
    }
}

impl fmt::Display for TypedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypedValue::UInt256(v) => write!(f, "{v}"),
            TypedValue::Bool(b) => write!(f, "{b}"),
            TypedValue::Address(a) => write!(f, "{a}"),
        }
    }
}

// JSON form: uint256 as decimal string, bool as bool, address as [engine, addr].
impl Serialize for TypedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TypedValue::UInt256(v) => serializer.serialize_str(&v.to_string()),
            TypedValue::Bool(b) => serializer.serialize_bool(*b),
            TypedValue::Address(a) => {
                let mut seq = serializer.serialize_seq(Some(2))?;
                seq.serialize_element(&a.engine)?;
                seq.serialize_element(&a.addr)?;
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for TypedValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValueVisitor;

        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = TypedValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an unsigned integer, decimal string, bool, or [engine, addr] pair")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<TypedValue, E> {
                Ok(TypedValue::uint(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<TypedValue, E> {
                u64::try_from(v)
                    .map(TypedValue::uint)
                    .map_err(|_| E::custom("negative values are not representable"))
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<TypedValue, E> {
                U256::from_dec_str(s)
                    .map(TypedValue::UInt256)
                    .ok_or_else(|| E::custom(format!("invalid uint256 literal `{s}`")))
            }

            fn visit_bool<E: de::Error>(self, b: bool) -> Result<TypedValue, E> {
                Ok(TypedValue::Bool(b))
            }

            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<TypedValue, A::Error> {
                let engine: u64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::custom("address pair needs two elements"))?;
                let addr: u64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::custom("address pair needs two elements"))?;
                if seq.next_element::<serde_json::Value>()?.is_some() {
                    return Err(de::Error::custom("address pair has exactly two elements"));
                }
                Ok(TypedValue::Address(AddressValue::new(engine, addr)))
            }
        }

        deserializer.deserialize_any(ValueVisitor)
    }
}

/// Errors raised by store operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("variable `{0}` is not defined")]
    Undefined(String),
    #[error("variable `{0}` is already defined")]
    AlreadyDefined(String),
    #[error("type mismatch on `{id}`: slot holds {slot}, value is {value}")]
    TypeMismatch {
        id: String,
        slot: TypeName,
        value: TypeName,
    },
}

/// Byte-addressed storage with a name space and a type space.
///
/// Bytes are sparse with implicit-zero reads; zero bytes are never stored,
/// so two stores holding the same values compare equal regardless of write
/// history. Allocation is a monotone bump allocator starting at 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ByteStore {
    bytes: BTreeMap<u64, u8>,
    names: BTreeMap<String, u64>,
    types: BTreeMap<String, TypeName>,
    next_free: u64,
}

impl ByteStore {
    pub fn new() -> Self {
        ByteStore::default()
    }

    pub fn is_defined(&self, id: &str) -> bool {
        self.names.contains_key(id)
    }

    pub fn type_of(&self, id: &str) -> Option<TypeName> {
        self.types.get(id).copied()
    }

    pub fn offset_of(&self, id: &str) -> Option<u64> {
        self.names.get(id).copied()
    }

    pub fn next_free(&self) -> u64 {
        self.next_free
    }

    /// Identifiers in allocation order.
    pub fn ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.names.keys().map(String::as_str).collect();
        ids.sort_by_key(|id| self.names[*id]);
        ids
    }

    /// Bind `id` to a fresh region for a value of type `t`.
    ///
    /// Bytes are left untouched; freshly allocated regions read as the
    /// type's init value because unwritten bytes are zero.
    pub fn allocate_new(&mut self, t: TypeName, id: &str) -> Result<(), StoreError> {
        if self.names.contains_key(id) {
            return Err(StoreError::AlreadyDefined(id.to_string()));
        }
        self.names.insert(id.to_string(), self.next_free);
        self.types.insert(id.to_string(), t);
        self.next_free += size_of(t);
        Ok(())
    }

    /// Decode the value of `id` from its region.
    pub fn read(&self, id: &str) -> Result<TypedValue, StoreError> {
        let off = *self
            .names
            .get(id)
            .ok_or_else(|| StoreError::Undefined(id.to_string()))?;
        let t = self.types[id];
        let buf: Vec<u8> = (off..off + size_of(t))
            .map(|a| self.bytes.get(&a).copied().unwrap_or(0))
            .collect();
        Ok(TypedValue::decode(t, &buf))
    }

    /// Encode `v` into the region of `id`. Only that region changes.
    pub fn write(&mut self, id: &str, v: &TypedValue) -> Result<(), StoreError> {
        let off = *self
            .names
            .get(id)
            .ok_or_else(|| StoreError::Undefined(id.to_string()))?;
        let slot = self.types[id];
        if slot != v.type_name() {
            return Err(StoreError::TypeMismatch {
                id: id.to_string(),
                slot,
                value: v.type_name(),
            });
        }
        for (k, byte) in v.encode().into_iter().enumerate() {
            let addr = off + k as u64;
            if byte == 0 {
                self.bytes.remove(&addr);
            } else {
                self.bytes.insert(addr, byte);
            }
        }
        Ok(())
    }

    /// Debug dump: one `name : type @ offset = hex-bytes` line per id,
    /// in allocation order.
    pub fn dump_lines(&self) -> Vec<String> {
        self.ids()
            .into_iter()
            .map(|id| {
                let off = self.names[id];
                let t = self.types[id];
                let hex: String = (off..off + size_of(t))
                    .map(|a| format!("{:02x}", self.bytes.get(&a).copied().unwrap_or(0)))
                    .collect();
                format!("{id} : {t} @ {off} = {hex}")
            })
            .collect()
    }
}

impl Serialize for ByteStore {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Var<'a> {
            name: &'a str,
            #[serde(rename = "type")]
            ty: TypeName,
            offset: u64,
            value: TypedValue,
        }
        let vars: Vec<Var<'_>> = self
            .ids()
            .into_iter()
            .map(|id| Var {
                name: id,
                ty: self.types[id],
                offset: self.names[id],
                value: self.read(id).expect("defined id reads"),
            })
            .collect();
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("vars", &vars)?;
        map.serialize_entry("next_free", &self.next_free)?;
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn type_sizes() {
        assert_eq!(size_of(TypeName::UInt256), 32);
        assert_eq!(size_of(TypeName::Bool), 1);
        assert_eq!(size_of(TypeName::Address), 16);
    }

    #[test]
    fn init_values() {
        assert_eq!(init_value(TypeName::UInt256), TypedValue::uint(0));
        assert_eq!(init_value(TypeName::Bool), TypedValue::Bool(false));
        assert_eq!(
            init_value(TypeName::Address),
            TypedValue::Address(AddressValue::new(0, 0))
        );
    }

    #[test]
    fn bump_allocation_offsets() {
        let mut s = ByteStore::new();
        s.allocate_new(TypeName::UInt256, "balance").unwrap();
        assert_eq!(s.offset_of("balance"), Some(0));
        assert_eq!(s.next_free(), 32);
        s.allocate_new(TypeName::Bool, "flag").unwrap();
        assert_eq!(s.offset_of("flag"), Some(32));
        assert_eq!(s.next_free(), 33);
    }

    #[test]
    fn allocate_twice_is_rejected() {
        let mut s = ByteStore::new();
        s.allocate_new(TypeName::UInt256, "x").unwrap();
        assert_eq!(
            s.allocate_new(TypeName::Bool, "x"),
            Err(StoreError::AlreadyDefined("x".into()))
        );
    }

    #[test]
    fn fresh_allocation_reads_as_init() {
        let mut s = ByteStore::new();
        for (t, id) in [
            (TypeName::UInt256, "a"),
            (TypeName::Bool, "b"),
            (TypeName::Address, "c"),
        ] {
            s.allocate_new(t, id).unwrap();
            assert_eq!(s.read(id).unwrap(), init_value(t));
        }
    }

    #[test]
    fn write_then_read() {
        let mut s = ByteStore::new();
        s.allocate_new(TypeName::UInt256, "x").unwrap();
        s.write("x", &TypedValue::uint(42)).unwrap();
        assert_eq!(s.read("x").unwrap(), TypedValue::uint(42));
    }

    #[test]
    fn read_unallocated_is_undefined() {
        let s = ByteStore::new();
        assert_eq!(s.read("nope"), Err(StoreError::Undefined("nope".into())));
    }

    #[test]
    fn write_wrong_type_is_rejected() {
        let mut s = ByteStore::new();
        s.allocate_new(TypeName::UInt256, "x").unwrap();
        assert_eq!(
            s.write("x", &TypedValue::Bool(true)),
            Err(StoreError::TypeMismatch {
                id: "x".into(),
                slot: TypeName::UInt256,
                value: TypeName::Bool,
            })
        );
    }

    #[test]
    fn zero_write_restores_pristine_state() {
        let mut s = ByteStore::new();
        s.allocate_new(TypeName::UInt256, "x").unwrap();
        let pristine = s.clone();
        s.write("x", &TypedValue::uint(7)).unwrap();
        assert_ne!(s, pristine);
        s.write("x", &TypedValue::uint(0)).unwrap();
        assert_eq!(s, pristine);
    }

    #[test]
    fn dump_format() {
        let mut s = ByteStore::new();
        s.allocate_new(TypeName::Bool, "flag").unwrap();
        s.write("flag", &TypedValue::Bool(true)).unwrap();
        assert_eq!(s.dump_lines(), vec!["flag : bool @ 0 = 01".to_string()]);
    }

    #[test]
    fn u256_checked_ops() {
        let max = U256::from_dec_str(
            "115792089237316195423570985008687907853269984665640564039457584007913129639935",
        )
        .unwrap();
        let one = U256::from_u64(1);
        assert_eq!(max.checked_add(&one), None);
        assert_eq!(U256::zero().checked_sub(&one), None);
        assert_eq!(max.checked_mul(&U256::from_u64(2)), None);
        assert_eq!(one.checked_div(&U256::zero()), None);
        assert_eq!(
            U256::from_u64(100).checked_sub(&U256::from_u64(30)),
            Some(U256::from_u64(70))
        );
    }

    #[test]
    fn u256_rejects_out_of_range_literals() {
        assert!(U256::from_dec_str(
            "115792089237316195423570985008687907853269984665640564039457584007913129639936"
        )
        .is_none());
        assert!(U256::from_dec_str("12x").is_none());
    }

    #[test]
    fn typed_value_json_forms() {
        let v: TypedValue = serde_json::from_str("70").unwrap();
        assert_eq!(v, TypedValue::uint(70));
        let v: TypedValue = serde_json::from_str("\"70\"").unwrap();
        assert_eq!(v, TypedValue::uint(70));
        let v: TypedValue = serde_json::from_str("true").unwrap();
        assert_eq!(v, TypedValue::Bool(true));
        let v: TypedValue = serde_json::from_str("[2,1]").unwrap();
        assert_eq!(v, TypedValue::Address(AddressValue::new(2, 1)));
        assert_eq!(
            serde_json::to_string(&TypedValue::uint(70)).unwrap(),
            "\"70\""
        );
    }

    fn arb_type() -> impl Strategy<Value = TypeName> {
        prop_oneof![
            Just(TypeName::UInt256),
            Just(TypeName::Bool),
            Just(TypeName::Address),
        ]
    }

    fn arb_value_of(t: TypeName) -> BoxedStrategy<TypedValue> {
        match t {
            TypeName::UInt256 => proptest::collection::vec(any::<u8>(), 32)
                .prop_map(|b| {
                    let mut buf = [0u8; 32];
                    buf.copy_from_slice(&b);
                    TypedValue::UInt256(U256::from_be_bytes(&buf))
                })
                .boxed(),
            TypeName::Bool => any::<bool>().prop_map(TypedValue::Bool).boxed(),
            TypeName::Address => (any::<u64>(), any::<u64>())
                .prop_map(|(e, a)| TypedValue::Address(AddressValue::new(e, a)))
                .boxed(),
        }
    }

    fn arb_value() -> impl Strategy<Value = TypedValue> {
        arb_type().prop_flat_map(arb_value_of)
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(v in arb_value()) {
            let bytes = v.encode();
            prop_assert_eq!(bytes.len() as u64, size_of(v.type_name()));
            prop_assert_eq!(TypedValue::decode(v.type_name(), &bytes), v);
        }

        #[test]
        fn frame_property(
            decls in proptest::collection::vec((arb_type(), "[a-z]{1,6}"), 1..8),
            writes in proptest::collection::vec((0usize..8, any::<u64>()), 0..16),
        ) {
            let mut s = ByteStore::new();
            let mut ids: Vec<(String, TypeName)> = Vec::new();
            for (t, id) in decls {
                if s.allocate_new(t, &id).is_ok() {
                    ids.push((id, t));
                }
            }
            for (pick, raw) in writes {
                let (id, t) = &ids[pick % ids.len()];
                let before: Vec<TypedValue> =
                    ids.iter().map(|(i, _)| s.read(i).unwrap()).collect();
                let v = match t {
                    TypeName::UInt256 => TypedValue::uint(raw),
                    TypeName::Bool => TypedValue::Bool(raw % 2 == 0),
                    TypeName::Address => TypedValue::Address(AddressValue::new(raw, raw / 2)),
                };
                s.write(id, &v).unwrap();
                prop_assert_eq!(s.read(id).unwrap(), v);
                for (k, (other, _)) in ids.iter().enumerate() {
                    if other != id {
                        prop_assert_eq!(&s.read(other).unwrap(), &before[k]);
                    }
                }
            }
        }

        #[test]
        fn allocations_never_overlap(decls in proptest::collection::vec((arb_type(), "[a-z]{1,6}"), 1..12)) {
            let mut s = ByteStore::new();
            let mut regions: Vec<(u64, u64)> = Vec::new();
            for (t, id) in decls {
                if s.allocate_new(t, &id).is_ok() {
                    let off = s.offset_of(&id).unwrap();
                    let end = off + size_of(t);
                    for &(o, e) in &regions {
                        prop_assert!(end <= o || e <= off);
                    }
                    prop_assert!(s.next_free() >= end);
                    regions.push((off, end));
                }
            }
        }
    }
}
