//! Binary checkpoint: `"3DMG"`, a u16 version, the model configuration,
//! the parameter count, all parameters as little-endian f32 (generator
//! first, then discriminator, each in declaration order) and a CRC32 of
//! everything after the magic and version.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Discriminator, Generator, ModelConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"3DMG";
const VERSION: u16 = 1;
const HEADER: usize = 6;
const CONFIG_BYTES: usize = 7 * 4;

/// Generator and discriminator weights sharing one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub generator: Generator,
    pub discriminator: Discriminator,
}

impl Checkpoint {
    pub fn new(generator: Generator, discriminator: Discriminator) -> Result<Self> {
        if generator.config() != discriminator.config() {
            return Err(Error::invalid("generator and discriminator configurations differ"));
        }
        Ok(Self {
            generator,
            discriminator,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.generator.config()
    }

    pub fn encode(&self) -> Vec<u8> {
        let c = self.config();
        let mut payload = Vec::new();
        for v in [
            c.latent_dim,
            c.mapping_layers,
            c.output_size,
            c.gen_base_channels,
            c.disc_base_channels,
            c.pack_size,
        ] {
            payload.extend_from_slice(&(v as u32).to_le_bytes());
        }
        payload.extend_from_slice(&c.leaky_slope.to_le_bytes());
        let params = self.generator.params().iter().chain(self.discriminator.params());
        let n: usize = self.generator.parameter_count() + self.discriminator.parameter_count();
        payload.extend_from_slice(&(n as u64).to_le_bytes());
        for p in params {
            for v in &p.data {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut out = Vec::with_capacity(HEADER + payload.len() + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::format(0, "missing 3DMG magic"));
        }
        if bytes.len() < HEADER + CONFIG_BYTES + 8 + 4 {
            return Err(Error::format(bytes.len() as u64, "truncated header"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let payload = &bytes[HEADER..bytes.len() - 4];
        let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(Error::Crc { stored, computed });
        }
        let u32_at = |i: usize| u32::from_le_bytes(payload[4 * i..4 * i + 4].try_into().expect("4 bytes")) as usize;
        let config = ModelConfig {
            latent_dim: u32_at(0),
            mapping_layers: u32_at(1),
            output_size: u32_at(2),
            gen_base_channels: u32_at(3),
            disc_base_channels: u32_at(4),
            pack_size: u32_at(5),
            leaky_slope: f32::from_le_bytes(payload[24..28].try_into().expect("4 bytes")),
        };
        config
            .validate()
            .map_err(|e| Error::format(HEADER as u64, format!("bad model configuration: {e}")))?;
        let count_at = HEADER + CONFIG_BYTES;
        let n = u64::from_le_bytes(payload[CONFIG_BYTES..CONFIG_BYTES + 8].try_into().expect("8 bytes"));
        let mut generator = Generator::zeroed(config)?;
        let mut discriminator = Discriminator::zeroed(config)?;
        let expected = generator.parameter_count() + discriminator.parameter_count();
        if n != expected as u64 {
            return Err(Error::format(
                count_at as u64,
                format!("parameter count {n} does not match configuration ({expected})"),
            ));
        }
        let data = &payload[CONFIG_BYTES + 8..];
        if data.len() != 4 * expected {
            return Err(Error::format(
                (count_at + 8) as u64,
                format!("payload holds {} bytes, expected {}", data.len(), 4 * expected),
            ));
        }
        let values: Vec<f32> = data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        let split = generator.parameter_count();
        super::params::load_flat(generator.params_mut(), &values[..split])?;
        super::params::load_flat(discriminator.params_mut(), &values[split..])?;
        Ok(Self {
            generator,
            discriminator,
        })
    }

    /// Writes to a temporary sibling file, then renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.encode())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Checkpoint {
        let c = ModelConfig {
            latent_dim: 8,
            mapping_layers: 2,
            gen_base_channels: 4,
            disc_base_channels: 2,
            ..ModelConfig::desk(16)
        };
        Checkpoint::new(Generator::new(c, 1).unwrap(), Discriminator::new(c, 2).unwrap()).unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let ck = small();
        assert_eq!(Checkpoint::decode(&ck.encode()).unwrap(), ck);
    }

    #[test]
    fn flipped_payload_bit_fails_crc() {
        let mut bytes = small().encode();
        let i = bytes.len() / 2;
        bytes[i] ^= 0x10;
        assert!(matches!(Checkpoint::decode(&bytes), Err(Error::Crc { .. })));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = small().encode();
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::decode(&bytes), Err(Error::Format { offset: 0, .. })));
        let mut bytes = small().encode();
        bytes[4] = 9;
        assert!(matches!(Checkpoint::decode(&bytes), Err(Error::Format { offset: 4, .. })));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = small();
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        assert!(!dir.path().join("model.ckpt.tmp").exists());
    }
}
