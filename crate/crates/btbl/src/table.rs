//! The table itself: a two-argument function E : [N] × [N₁] → [M] stored as
//! bit-packed m-bit cells, plus row/color subsets and enumeration.
//!
//! Canonical encoding: cells in row-major order (row index varies slowest),
//! each cell its color as an m-bit big-endian field, so bit b of cell (x, y)
//! sits at position ((x·N₁) + y)·m + b of the encoding. The binary file
//! format is a fixed header followed by exactly that bit string.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::guard::Guards;
use crate::params::{Params, TableDims};
use crate::rng::SplitMix64;
use crate::sets::IndexSet;

pub type Color = u32;

/// File magic for the on-disk format.
pub const MAGIC: &[u8; 4] = b"BTBL";
/// On-disk format version.
pub const FORMAT_VERSION: u8 = 1;

/// Set of row indices of a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSet(IndexSet);

/// Set of colors (m-bit output values) of a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorSet(IndexSet);

impl RowSet {
    pub fn empty(rows: u64) -> Self {
        RowSet(IndexSet::empty(rows))
    }

    pub fn from_indices(rows: u64, indices: &[u64]) -> Result<Self> {
        Ok(RowSet(IndexSet::from_indices(rows, indices)?))
    }

    pub fn insert(&mut self, row: u64) -> Result<()> {
        self.0.insert(row)
    }

    pub fn contains(&self, row: u64) -> bool {
        self.0.contains(row)
    }

    pub fn len(&self) -> u64 {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> Vec<u64> {
        self.0.indices()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter()
    }
}

impl ColorSet {
    pub fn empty(colors: u64) -> Self {
        ColorSet(IndexSet::empty(colors))
    }

    pub fn from_colors(colors: u64, members: &[Color]) -> Result<Self> {
        let as_u64: Vec<u64> = members.iter().map(|&c| c as u64).collect();
        Ok(ColorSet(IndexSet::from_indices(colors, &as_u64)?))
    }

    pub fn insert(&mut self, color: Color) -> Result<()> {
        self.0.insert(color as u64)
    }

    pub fn contains(&self, color: Color) -> bool {
        self.0.contains(color as u64)
    }

    pub fn len(&self) -> u64 {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn colors(&self) -> Vec<Color> {
        self.0.iter().map(|c| c as Color).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Color> + '_ {
        self.0.iter().map(|c| c as Color)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    params: Params,
    dims: TableDims,
    bits: Bits,
}

impl Table {
    /// All-zero table.
    pub fn zero(params: Params) -> Result<Self> {
        let dims = params.dims()?;
        Ok(Table {
            params,
            dims,
            bits: Bits::zeros(dims.bits as usize),
        })
    }

    /// Table with cell (x, y) = f(x, y); f must return values below M.
    pub fn from_fn(params: Params, mut f: impl FnMut(u64, u64) -> Color) -> Result<Self> {
        let dims = params.dims()?;
        let mut bits = Bits::new();
        for x in 0..dims.rows {
            for y in 0..dims.cols {
                let color = f(x, y);
                assert!(
                    (color as u64) < dims.colors,
                    "cell ({x},{y}) = {color} out of {} colors",
                    dims.colors
                );
                bits.push_uint_msb(color as u64, params.m);
            }
        }
        Ok(Table { params, dims, bits })
    }

    /// Decode a table from its canonical bit encoding.
    pub fn from_bits(params: Params, bits: &Bits) -> Result<Self> {
        let dims = params.dims()?;
        if bits.len() as u64 != dims.bits {
            return Err(Error::Format(format!(
                "encoding has {} bits, shape needs {}",
                bits.len(),
                dims.bits
            )));
        }
        Ok(Table {
            params,
            dims,
            bits: bits.clone(),
        })
    }

    /// Table number `code` in enumeration order: the encoding is the
    /// big-endian bits of `code`. Requires the shape to fit in 63 bits.
    pub fn from_code(params: Params, code: u64) -> Result<Self> {
        let dims = params.dims()?;
        if dims.bits > 63 {
            return Err(Error::Domain(format!(
                "from_code needs an encoding of at most 63 bits, shape has {}",
                dims.bits
            )));
        }
        if code >> dims.bits != 0 {
            return Err(Error::IndexOutOfRange {
                what: "table code",
                index: code,
                limit: 1 << dims.bits,
            });
        }
        let mut bits = Bits::new();
        bits.push_uint_msb(code, dims.bits as u32);
        Table::from_bits(params, &bits)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn dims(&self) -> &TableDims {
        &self.dims
    }

    /// The color at row x, column y.
    pub fn extract(&self, x: u64, y: u64) -> Result<Color> {
        if x >= self.dims.rows {
            return Err(Error::IndexOutOfRange {
                what: "row",
                index: x,
                limit: self.dims.rows,
            });
        }
        if y >= self.dims.cols {
            return Err(Error::IndexOutOfRange {
                what: "column",
                index: y,
                limit: self.dims.cols,
            });
        }
        Ok(self.cell(x, y))
    }

    /// Unchecked fast path used by the checkers.
    #[inline]
    pub(crate) fn cell(&self, x: u64, y: u64) -> Color {
        let start = (x * self.dims.cols + y) * self.params.m as u64;
        self.bits.read_uint_msb(start as usize, self.params.m) as Color
    }

    /// Canonical bit encoding (row-major, m-bit big-endian cells).
    pub fn encode_bits(&self) -> Bits {
        self.bits.clone()
    }

    /// Uniformly random table: cell values are consecutive outputs of the
    /// SplitMix64 stream for `rng_seed`, masked to m bits (M is a power of
    /// two, so masking is exactly uniform).
    pub fn random(params: Params, rng_seed: u64) -> Result<Self> {
        let dims = params.dims()?;
        let mut rng = SplitMix64::new(rng_seed);
        let mask = dims.colors - 1;
        let mut bits = Bits::new();
        for _ in 0..dims.cells {
            bits.push_uint_msb(rng.next_u64() & mask, params.m);
        }
        Ok(Table { params, dims, bits })
    }

    /// Per-row histogram: counts[x][c] = number of columns y with E(x,y) = c.
    pub fn row_histograms(&self) -> Vec<Vec<u32>> {
        let mut hist = vec![vec![0u32; self.dims.colors as usize]; self.dims.rows as usize];
        for x in 0..self.dims.rows {
            let row = &mut hist[x as usize];
            for y in 0..self.dims.cols {
                row[self.cell(x, y) as usize] += 1;
            }
        }
        hist
    }

    /// Enumerate every table of this shape in lexicographic encoding order
    /// (the all-zero table first). Guarded: refuses shapes above
    /// `guards.table_enum_bits` encoding bits.
    pub fn enumerate(params: Params, guards: &Guards) -> Result<TableEnumerator> {
        let dims = params.dims()?;
        if dims.bits > guards.table_enum_bits as u64 {
            return Err(Error::GuardExceeded {
                operation: "enumerate_tables",
                estimate: 1u128 << dims.bits.min(127),
                limit: 1u128 << guards.table_enum_bits,
            });
        }
        Ok(TableEnumerator {
            params,
            next: 0,
            total: 1u64 << dims.bits,
        })
    }

    /// Write the binary format: magic, version, five u16 exponents, the
    /// slack exponent as a little-endian f64, then the encoding payload.
    pub fn write_to(&self, writer: &mut impl Write) -> Result<()> {
        for field in [self.params.n, self.params.n1, self.params.m, self.params.k, self.params.d] {
            if field > u16::MAX as u32 {
                return Err(Error::Format(format!("exponent {field} exceeds u16")));
            }
        }
        writer.write_all(MAGIC)?;
        writer.write_all(&[FORMAT_VERSION])?;
        for field in [self.params.n, self.params.n1, self.params.m, self.params.k, self.params.d] {
            writer.write_all(&(field as u16).to_le_bytes())?;
        }
        writer.write_all(&self.params.delta.to_le_bytes())?;
        writer.write_all(self.bits.as_bytes())?;
        Ok(())
    }

    pub fn read_from(reader: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let mut version = [0u8; 1];
        reader.read_exact(&mut version)?;
        if version[0] != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", version[0])));
        }
        let mut exps = [0u32; 5];
        for e in exps.iter_mut() {
            let mut buf = [0u8; 2];
            reader.read_exact(&mut buf)?;
            *e = u16::from_le_bytes(buf) as u32;
        }
        let mut delta_buf = [0u8; 8];
        reader.read_exact(&mut delta_buf)?;
        let delta = f64::from_le_bytes(delta_buf);
        let params = Params::new(exps[0], exps[1], exps[2], exps[3], exps[4], delta);
        let dims = params.dims().map_err(|e| Error::Format(e.to_string()))?;
        let mut payload = vec![0u8; (dims.bits as usize).div_ceil(8)];
        reader.read_exact(&mut payload)?;
        let mut trailing = [0u8; 1];
        if reader.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let bits = Bits::from_bytes(dims.bits as usize, payload)?;
        Ok(Table { params, dims, bits })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write_to(&mut writer)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Table::read_from(&mut BufReader::new(File::open(path)?))
    }
}

/// Lexicographic walk over all tables of a (tiny) shape.
#[derive(Debug)]
pub struct TableEnumerator {
    params: Params,
    next: u64,
    total: u64,
}

impl TableEnumerator {
    pub fn total(&self) -> u64 {
        self.total
    }
}

impl Iterator for TableEnumerator {
    type Item = Table;

    fn next(&mut self) -> Option<Table> {
        if self.next >= self.total {
            return None;
        }
        let table = Table::from_code(self.params, self.next).expect("guarded shape");
        self.next += 1;
        Some(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro() -> Params {
        Params::new(3, 2, 2, 1, 2, 1.0)
    }

    #[test]
    fn encoding_layout_is_row_major_msb_first() {
        // 2 rows × 2 cols × 2-bit cells; distinct values expose the order.
        let p = Params::new(1, 1, 2, 1, 1, 1.0);
        let t = Table::from_fn(p, |x, y| (2 * x + y) as Color).unwrap();
        // cells: (0,0)=0b00 (0,1)=0b01 (1,0)=0b10 (1,1)=0b11
        assert_eq!(t.encode_bits().to_string(), "00011011");
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(t.extract(x, y).unwrap(), (2 * x + y) as Color);
            }
        }
    }

    #[test]
    fn extract_rejects_out_of_range() {
        let t = Table::zero(micro()).unwrap();
        assert!(t.extract(8, 0).is_err());
        assert!(t.extract(0, 4).is_err());
        assert!(t.extract(7, 3).is_ok());
    }

    #[test]
    fn encode_decode_roundtrip() {
        let t = Table::random(micro(), 42).unwrap();
        let bits = t.encode_bits();
        let back = Table::from_bits(micro(), &bits).unwrap();
        assert_eq!(t, back);
        // Wrong length rejected.
        let mut short = bits.clone();
        short.push(false);
        assert!(Table::from_bits(micro(), &short).is_err());
    }

    #[test]
    fn random_reproducible_and_seed_sensitive() {
        let a = Table::random(micro(), 7).unwrap();
        let b = Table::random(micro(), 7).unwrap();
        let c = Table::random(micro(), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_colors_uniform_within_5_sigma() {
        // 2^12 cells over M = 4 colors: expected 1024 per color,
        // sigma = sqrt(4096·(1/4)(3/4)) ≈ 27.7.
        let p = Params::new(4, 8, 2, 1, 2, 1.0);
        let t = Table::random(p, 2024).unwrap();
        let mut counts = [0u64; 4];
        for x in 0..16 {
            for y in 0..256 {
                counts[t.cell(x, y) as usize] += 1;
            }
        }
        let expected = 1024.0;
        let sigma = (4096.0f64 * 0.25 * 0.75).sqrt();
        for (color, &count) in counts.iter().enumerate() {
            let dev = (count as f64 - expected).abs();
            assert!(dev <= 5.0 * sigma, "color {color}: count {count}");
        }
    }

    #[test]
    fn enumeration_counts_and_order() {
        // N = 2, N₁ = 1, m = 1: 4 tables, all-zero first, lexicographic.
        let p = Params::new(1, 0, 1, 0, 1, 1.0);
        let tables: Vec<Table> = Table::enumerate(p, &Guards::default()).unwrap().collect();
        assert_eq!(tables.len(), 4);
        let encodings: Vec<String> = tables.iter().map(|t| t.encode_bits().to_string()).collect();
        assert_eq!(encodings, vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn enumeration_guard_reports_size() {
        // Micro shape has 64 encoding bits: far beyond the 24-bit guard.
        match Table::enumerate(micro(), &Guards::default()) {
            Err(Error::GuardExceeded { estimate, .. }) => {
                assert_eq!(estimate, 1u128 << 64);
            }
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn file_roundtrip_bit_exact() {
        let t = Table::random(micro(), 31337).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        // 4 magic + 1 version + 10 exponents + 8 delta + 8 payload.
        assert_eq!(buf.len(), 4 + 1 + 10 + 8 + 8);
        assert_eq!(&buf[0..4], b"BTBL");
        let back = Table::read_from(&mut &buf[..]).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn file_rejects_corruption() {
        let t = Table::zero(micro()).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(Table::read_from(&mut &bad_magic[..]).is_err());

        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(Table::read_from(&mut &bad_version[..]).is_err());

        let truncated = &buf[..buf.len() - 1];
        assert!(Table::read_from(&mut &truncated[..]).is_err());

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(Table::read_from(&mut &trailing[..]).is_err());
    }

    #[test]
    fn row_histograms_count_cells() {
        let t = Table::from_fn(micro(), |x, y| ((x + y) % 4) as Color).unwrap();
        let hist = t.row_histograms();
        for x in 0..8u64 {
            let total: u32 = hist[x as usize].iter().sum();
            assert_eq!(total, 4);
            // Each row of this pattern hits 4 distinct colors once each.
            assert!(hist[x as usize].iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn sets_reject_out_of_domain() {
        let mut rows = RowSet::empty(8);
        assert!(rows.insert(7).is_ok());
        assert!(rows.insert(8).is_err());
        let mut colors = ColorSet::empty(4);
        assert!(colors.insert(3).is_ok());
        assert!(colors.insert(4).is_err());
        assert_eq!(rows.len(), 1);
        assert_eq!(colors.colors(), vec![3]);
    }
}
