// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Board server: a TCP command port and a UDP status sender.
//!
//! Every connection gets its own stream decoder; decoded frames are applied
//! to the shared board one at a time under its lock, so commands from all
//! clients form a single ordered queue.

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};

use super::board::Board;
use super::frame::{write_frame, Decoded, Decoder, Frame};
use super::status::StatusPacket;

pub const DEFAULT_COMMAND_PORT: u16 = 5025;
pub const DEFAULT_STATUS_PORT: u16 = 5026;

pub type SharedBoard = Arc<Mutex<Board>>;

pub fn shared(board: Board) -> SharedBoard {
    Arc::new(Mutex::new(board))
}

pub(crate) fn lock(board: &SharedBoard) -> MutexGuard<'_, Board> {
    board.lock().unwrap_or_else(|p| p.into_inner())
}

/// Feeds raw bytes to a decoder and returns one response per decoded frame,
/// plus a NAK for each frame dropped on a CRC mismatch. Garbage between
/// frames is skipped without a response.
pub fn ingest(board: &mut Board, decoder: &mut Decoder, bytes: &[u8]) -> Vec<Frame> {
    decoder.push(bytes);
    let mut out = Vec::new();
    while let Some(item) = decoder.next_item() {
        out.push(match item {
            Decoded::Frame(f) => board.handle_command(&f),
            Decoded::Corrupt { .. } => Frame::nak(),
        });
    }
    out
}

/// Sends status packets as UDP datagrams.
#[derive(Debug)]
pub struct StatusSender {
    socket: UdpSocket,
    to: SocketAddr,
}

impl StatusSender {
    pub fn new(to: SocketAddr) -> io::Result<Self> {
        let bind: SocketAddr = if to.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }
            .parse()
            .unwrap();
        let socket = UdpSocket::bind(bind)?;
        socket.set_broadcast(true)?;
        Ok(StatusSender { socket, to })
    }

    pub fn send(&self, packet: &StatusPacket) -> io::Result<()> {
        self.socket.send_to(&packet.to_bytes(), self.to).map(|_| ())
    }
}

#[derive(Debug)]
pub struct TcpServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl TcpServer {
    /// Binds `listen` and serves `board` on a background thread. Status
    /// packets go to `status_to` when given.
    pub fn spawn(
        board: SharedBoard,
        listen: impl ToSocketAddrs,
        status_to: Option<SocketAddr>,
    ) -> io::Result<Self> {
        let listener = TcpListener::bind(listen)?;
        let addr = listener.local_addr()?;
        let status = status_to.map(StatusSender::new).transpose()?.map(Arc::new);
        let shutdown = Arc::new(AtomicBool::new(false));
        let stop = shutdown.clone();
        let accept = thread::spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let board = board.clone();
                let status = status.clone();
                thread::spawn(move || {
                    let _ = serve_connection(stream, &board, status.as_deref());
                });
            }
        });
        Ok(TcpServer {
            addr,
            shutdown,
            accept: Some(accept),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the server stops.
    pub fn join(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for TcpServer {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop();
        }
    }
}

fn serve_connection(
    mut stream: TcpStream,
    board: &SharedBoard,
    status: Option<&StatusSender>,
) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut decoder = Decoder::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut out = Vec::new();
    loop {
        let n = stream.read(&mut buf)?;
        if n == 0 {
            let _ = stream.shutdown(Shutdown::Both);
            return Ok(());
        }
        out.clear();
        let packets = {
            let mut b = lock(board);
            for r in ingest(&mut b, &mut decoder, &buf[..n]) {
                write_frame(&r, &mut out);
            }
            b.drain_status()
        };
        if let Some(s) = status {
            for p in &packets {
                let _ = s.send(p);
            }
        }
        stream.write_all(&out)?;
    }
}
