/**
 * In-memory session holder. The physician's session token lives only in
 * this module's closure for the lifetime of the page: it is never written
 * to localStorage, sessionStorage, cookies, or IndexedDB, so a token
 * cannot outlive the tab that obtained it.
 */

export interface SessionInfo {
  token: string;
  firstName: string;
  lastName: string;
  institution: string;
}

let current: SessionInfo | null = null;

export function setSession(info: SessionInfo): void {
  current = info;
}

export function getSession(): SessionInfo | null {
  return current;
}

export function clearSession(): void {
  current = null;
}
