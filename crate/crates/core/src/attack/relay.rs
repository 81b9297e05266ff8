//! TCP bridge between a forging host and the injecting radio.
//!
//! Both directions carry envelopes: a 4-byte big-endian length followed by
//! that many bytes. Client to server, an envelope is one of
//!
//! ```text
//!   len == 0              run one tick (barrier)
//!   len == 2, [0x00, ch]  retune the injecting radio
//!   len >= 10             an 802.11 frame to inject
//! ```
//!
//! Frames queued before a barrier go out during that tick, in order. The
//! server answers each barrier with every frame its radio heard since the
//! previous one, then an empty envelope.

use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::link::AttackLink;
use super::AttackError;
use crate::simworld::{NodeId, World};

pub const MAX_ENVELOPE: usize = 65535;
pub const IDLE_TIMEOUT: Duration = Duration::from_secs(30);
const MIN_FRAME_LEN: usize = 10;
const TUNE_TAG: u8 = 0x00;

pub fn write_envelope(w: &mut impl Write, payload: &[u8]) -> Result<(), AttackError> {
    if payload.len() > MAX_ENVELOPE {
        return Err(AttackError::MalformedEnvelope(format!(
            "{} bytes exceeds {MAX_ENVELOPE}",
            payload.len()
        )));
    }
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(payload)?;
    Ok(())
}

/// `None` on a clean end of stream between envelopes.
pub fn read_envelope(r: &mut impl Read) -> Result<Option<Vec<u8>>, AttackError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => {
                return Err(AttackError::MalformedEnvelope(
                    "stream ended inside a length prefix".into(),
                ))
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_ENVELOPE {
        return Err(AttackError::MalformedEnvelope(format!(
            "declared length {len} exceeds {MAX_ENVELOPE}"
        )));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => {
            AttackError::MalformedEnvelope(format!("stream ended inside a {len}-byte envelope"))
        }
        _ => e.into(),
    })?;
    Ok(Some(buf))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Request {
    Tick,
    Tune(u8),
    Frame(Vec<u8>),
}

fn parse_request(env: Vec<u8>) -> Result<Request, AttackError> {
    match env.len() {
        0 => Ok(Request::Tick),
        2 if env[0] == TUNE_TAG => Ok(Request::Tune(env[1])),
        n if n >= MIN_FRAME_LEN => Ok(Request::Frame(env)),
        n => Err(AttackError::MalformedEnvelope(format!(
            "{n}-byte envelope is neither a frame nor a command"
        ))),
    }
}

enum Msg {
    Open(usize, TcpStream),
    Req(usize, Request),
    Closed(usize, Option<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayStats {
    pub clients: usize,
    pub injected: u64,
    pub ticks: u64,
    /// Connections dropped for protocol errors or idleness.
    pub dropped: Vec<String>,
}

struct Client {
    id: usize,
    radio: NodeId,
    out: BufWriter<TcpStream>,
    pending: Vec<Vec<u8>>,
}

pub struct RelayServer {
    listener: TcpListener,
    stop: Arc<AtomicBool>,
    max_clients: Option<usize>,
    idle_timeout: Duration,
}

impl RelayServer {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self, AttackError> {
        Ok(RelayServer {
            listener: TcpListener::bind(addr)?,
            stop: Arc::new(AtomicBool::new(false)),
            max_clients: None,
            idle_timeout: IDLE_TIMEOUT,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Setting the flag makes `serve` return at its next poll.
    pub fn stop_handle(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    /// Return after this many client connections have closed.
    pub fn max_clients(mut self, n: usize) -> Self {
        self.max_clients = Some(n);
        self
    }

    pub fn idle_timeout(mut self, t: Duration) -> Self {
        self.idle_timeout = t;
        self
    }

    /// Drives `world` on behalf of connected clients. Each client gets its
    /// own radio on the drone's channel; requests from all clients are
    /// applied in arrival order. Virtual time only moves on barriers.
    pub fn serve(self, mut world: World) -> Result<(World, RelayStats), AttackError> {
        let (tx, rx) = mpsc::channel::<Msg>();
        self.listener.set_nonblocking(true)?;
        let stop = self.stop.clone();
        let idle = self.idle_timeout;
        let listener = self.listener;
        let acceptor = thread::spawn(move || accept_loop(listener, tx, stop, idle));

        let mut stats = RelayStats::default();
        let mut clients: Vec<Client> = Vec::new();
        let mut closed = 0usize;
        let result = loop {
            if self.stop.load(Ordering::Relaxed) || self.max_clients.is_some_and(|m| closed >= m) {
                break Ok(());
            }
            let msg = match rx.recv_timeout(Duration::from_millis(20)) {
                Ok(m) => m,
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => break Ok(()),
            };
            match msg {
                Msg::Open(id, stream) => {
                    let channel = world.link().channel;
                    match world.add_radio(channel) {
                        Ok(radio) => {
                            stats.clients += 1;
                            clients.push(Client {
                                id,
                                radio,
                                out: BufWriter::new(stream),
                                pending: Vec::new(),
                            });
                        }
                        Err(e) => break Err(e.into()),
                    }
                }
                Msg::Req(id, req) => {
                    let Some(idx) = clients.iter().position(|c| c.id == id) else {
                        continue;
                    };
                    if let Err(e) = handle(&mut world, &mut clients[idx], req, &mut stats) {
                        stats.dropped.push(format!("client {id}: {e}"));
                        let c = clients.remove(idx);
                        let _ = c.out.get_ref().shutdown(Shutdown::Both);
                        closed += 1;
                    }
                }
                Msg::Closed(id, why) => {
                    if let Some(idx) = clients.iter().position(|c| c.id == id) {
                        let c = clients.remove(idx);
                        let _ = c.out.get_ref().shutdown(Shutdown::Both);
                        closed += 1;
                        if let Some(w) = why {
                            stats.dropped.push(format!("client {id}: {w}"));
                        }
                    }
                }
            }
        };
        self.stop.store(true, Ordering::Relaxed);
        for c in &clients {
            let _ = c.out.get_ref().shutdown(Shutdown::Both);
        }
        let _ = acceptor.join();
        result.map(|()| (world, stats))
    }
}

fn handle(world: &mut World, c: &mut Client, req: Request, stats: &mut RelayStats) -> Result<(), AttackError> {
    match req {
        Request::Frame(f) => c.pending.push(f),
        Request::Tune(ch) => world.tune_radio(c.radio, ch)?,
        Request::Tick => {
            stats.injected += c.pending.len() as u64;
            world.inject(c.radio, std::mem::take(&mut c.pending));
            world.run_tick();
            stats.ticks += 1;
            for (_, f) in world.take_heard(c.radio) {
                write_envelope(&mut c.out, &f)?;
            }
            write_envelope(&mut c.out, &[])?;
            c.out.flush()?;
        }
    }
    Ok(())
}

fn accept_loop(listener: TcpListener, tx: Sender<Msg>, stop: Arc<AtomicBool>, idle: Duration) {
    let mut next_id = 0usize;
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, _)) => {
                let id = next_id;
                next_id += 1;
                let setup = stream
                    .set_nonblocking(false)
                    .and_then(|()| stream.set_read_timeout(Some(idle)))
                    .and_then(|()| stream.set_nodelay(true))
                    .and_then(|()| stream.try_clone());
                let Ok(writer) = setup else {
                    continue;
                };
                if tx.send(Msg::Open(id, writer)).is_err() {
                    return;
                }
                let tx = tx.clone();
                thread::spawn(move || read_loop(id, stream, tx));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(_) => thread::sleep(Duration::from_millis(5)),
        }
    }
}

fn read_loop(id: usize, stream: TcpStream, tx: Sender<Msg>) {
    let mut r = BufReader::new(stream);
    let why = loop {
        match read_envelope(&mut r).and_then(|e| e.map(parse_request).transpose()) {
            Ok(Some(req)) => {
                if tx.send(Msg::Req(id, req)).is_err() {
                    return;
                }
            }
            Ok(None) => break None,
            Err(AttackError::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                break Some("idle timeout".to_string())
            }
            Err(e) => break Some(e.to_string()),
        }
    };
    let _ = tx.send(Msg::Closed(id, why));
}

/// Client side: an attack link whose radio lives behind a relay server.
pub struct RelayLink {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl RelayLink {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, AttackError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(IDLE_TIMEOUT))?;
        Ok(RelayLink {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }

    fn lost(e: AttackError) -> AttackError {
        match e {
            AttackError::Io(_) => AttackError::ConnectionLost,
            other => other,
        }
    }
}

impl AttackLink for RelayLink {
    fn tune(&mut self, channel: u8) -> Result<(), AttackError> {
        write_envelope(&mut self.writer, &[TUNE_TAG, channel]).map_err(Self::lost)
    }

    fn tick(&mut self, frames: Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, AttackError> {
        for f in &frames {
            if f.len() < MIN_FRAME_LEN {
                return Err(AttackError::MalformedEnvelope(format!(
                    "{}-byte frame is too short to relay",
                    f.len()
                )));
            }
            write_envelope(&mut self.writer, f).map_err(Self::lost)?;
        }
        write_envelope(&mut self.writer, &[]).map_err(Self::lost)?;
        self.writer.flush().map_err(|_| AttackError::ConnectionLost)?;
        let mut heard = Vec::new();
        loop {
            match read_envelope(&mut self.reader).map_err(Self::lost)? {
                None => return Err(AttackError::ConnectionLost),
                Some(e) if e.is_empty() => return Ok(heard),
                Some(e) => heard.push(e),
            }
        }
    }
}

/// One-shot injection: sends `frames` through the relay in a single tick
/// and returns how many the server confirmed by completing that tick.
pub fn relay_send(addr: impl ToSocketAddrs, frames: &[Vec<u8>]) -> Result<usize, AttackError> {
    let mut link = RelayLink::connect(addr)?;
    link.tick(frames.to_vec())?;
    Ok(frames.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trip() {
        let mut buf = Vec::new();
        write_envelope(&mut buf, b"0123456789ab").unwrap();
        write_envelope(&mut buf, &[]).unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 12]);
        let mut r = &buf[..];
        assert_eq!(read_envelope(&mut r).unwrap().unwrap(), b"0123456789ab");
        assert_eq!(read_envelope(&mut r).unwrap().unwrap(), b"");
        assert!(read_envelope(&mut r).unwrap().is_none());
    }

    #[test]
    fn truncated_and_oversized_envelopes() {
        let mut r: &[u8] = &[0, 0, 0, 20, 1, 2, 3];
        assert!(matches!(read_envelope(&mut r), Err(AttackError::MalformedEnvelope(_))));
        let mut r: &[u8] = &[0, 0];
        assert!(matches!(read_envelope(&mut r), Err(AttackError::MalformedEnvelope(_))));
        let mut r: &[u8] = &[0, 1, 0, 0];
        assert!(matches!(read_envelope(&mut r), Err(AttackError::MalformedEnvelope(_))));
        assert!(matches!(
            write_envelope(&mut Vec::new(), &vec![0; MAX_ENVELOPE + 1]),
            Err(AttackError::MalformedEnvelope(_))
        ));
    }

    #[test]
    fn request_kinds() {
        assert_eq!(parse_request(vec![]).unwrap(), Request::Tick);
        assert_eq!(parse_request(vec![0, 149]).unwrap(), Request::Tune(149));
        assert_eq!(parse_request(vec![7; 10]).unwrap(), Request::Frame(vec![7; 10]));
        assert!(parse_request(vec![1, 2, 3]).is_err());
    }
}
