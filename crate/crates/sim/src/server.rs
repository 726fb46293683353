//! TCP side of the viewer protocol. Each client gets a reader thread
//! feeding parsed inputs to the loop and a writer thread draining its
//! outbox. Events queue in order; snapshots coalesce so that a slow
//! viewer only ever receives the newest one and never stalls the loop.

use std::collections::VecDeque;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};

use crate::input::InputMsg;
use crate::protocol::{parse_client_line, Body, Message};

#[derive(Default)]
struct Outbox {
    queue: VecDeque<String>,
    snapshot: Option<String>,
    closed: bool,
}

pub struct Client {
    outbox: Mutex<Outbox>,
    ready: Condvar,
}

impl Client {
    fn new() -> Client {
        Client { outbox: Mutex::new(Outbox::default()), ready: Condvar::new() }
    }

    fn with_outbox(&self, f: impl FnOnce(&mut Outbox)) {
        let mut out = self.outbox.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut out);
        drop(out);
        self.ready.notify_all();
    }

    pub fn send(&self, line: String) {
        self.with_outbox(|o| o.queue.push_back(line));
    }

    pub fn send_error(&self, message: String) {
        self.send(Message::new(Body::Error { message }).to_line());
    }

    fn set_snapshot(&self, line: String) {
        self.with_outbox(|o| o.snapshot = Some(line));
    }

    fn close(&self) {
        self.with_outbox(|o| o.closed = true);
    }

    fn is_closed(&self) -> bool {
        self.outbox.lock().unwrap_or_else(|p| p.into_inner()).closed
    }
}

/// An input received from a client, with a handle to answer it.
pub struct ClientInput {
    pub client: Arc<Client>,
    pub input: InputMsg,
}

struct Shared {
    clients: Mutex<Vec<Arc<Client>>>,
    stop: AtomicBool,
}

pub struct Server {
    addr: SocketAddr,
    shared: Arc<Shared>,
    inputs: Receiver<ClientInput>,
    accept: Option<JoinHandle<()>>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Server> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared { clients: Mutex::new(Vec::new()), stop: AtomicBool::new(false) });
        let (tx, rx) = mpsc::channel();
        let accept = {
            let shared = Arc::clone(&shared);
            thread::Builder::new().name("accept".into()).spawn(move || accept_loop(listener, shared, tx))?
        };
        Ok(Server { addr, shared, inputs: rx, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn client_count(&self) -> usize {
        let mut clients = self.shared.clients.lock().unwrap_or_else(|p| p.into_inner());
        clients.retain(|c| !c.is_closed());
        clients.len()
    }

    /// Inputs received since the last call, in arrival order.
    pub fn drain_inputs(&self) -> Vec<ClientInput> {
        self.inputs.try_iter().collect()
    }

    fn each_client(&self, mut f: impl FnMut(&Client)) {
        let mut clients = self.shared.clients.lock().unwrap_or_else(|p| p.into_inner());
        clients.retain(|c| !c.is_closed());
        for c in clients.iter() {
            f(c);
        }
    }

    /// Queues a message for every client.
    pub fn broadcast(&self, msg: &Message) {
        let line = msg.to_line();
        self.each_client(|c| c.send(line.clone()));
    }

    /// Replaces each client's pending snapshot.
    pub fn publish_snapshot(&self, msg: &Message) {
        let line = msg.to_line();
        self.each_client(|c| c.set_snapshot(line.clone()));
    }

    /// Flushes every outbox, disconnects all clients and stops accepting.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        let clients = std::mem::take(&mut *self.shared.clients.lock().unwrap_or_else(|p| p.into_inner()));
        for c in clients {
            c.close();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop();
        }
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, tx: Sender<ClientInput>) {
    for stream in listener.incoming() {
        if shared.stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let _ = stream.set_nodelay(true);
        let Ok(read_half) = stream.try_clone() else { continue };
        let client = Arc::new(Client::new());
        shared.clients.lock().unwrap_or_else(|p| p.into_inner()).push(Arc::clone(&client));
        {
            let client = Arc::clone(&client);
            let tx = tx.clone();
            let _ = thread::Builder::new().name("client-read".into()).spawn(move || read_loop(read_half, client, tx));
        }
        let _ = thread::Builder::new().name("client-write".into()).spawn(move || write_loop(stream, client));
    }
}

fn read_loop(stream: TcpStream, client: Arc<Client>, tx: Sender<ClientInput>) {
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        match parse_client_line(&line) {
            Ok(input) => {
                if tx.send(ClientInput { client: Arc::clone(&client), input }).is_err() {
                    break;
                }
            }
            Err(e) => client.send_error(e),
        }
    }
    client.close();
}

fn write_loop(mut stream: TcpStream, client: Arc<Client>) {
    loop {
        let (batch, snapshot, closed) = {
            let mut out = client.outbox.lock().unwrap_or_else(|p| p.into_inner());
            while out.queue.is_empty() && out.snapshot.is_none() && !out.closed {
                out = client.ready.wait(out).unwrap_or_else(|p| p.into_inner());
            }
            (std::mem::take(&mut out.queue), out.snapshot.take(), out.closed)
        };
        let mut write = || -> io::Result<()> {
            for line in &batch {
                stream.write_all(line.as_bytes())?;
            }
            if let Some(s) = &snapshot {
                stream.write_all(s.as_bytes())?;
            }
            stream.flush()
        };
        if write().is_err() {
            client.close();
            break;
        }
        if closed {
            break;
        }
    }
    let _ = stream.shutdown(Shutdown::Both);
}
