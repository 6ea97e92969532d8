public virtual int Size() { return count; }
public override string ToString() { return "Term(" + field + ":" + text + ")"; }
public virtual bool IsEmpty() { return size == 0; }
public virtual void Clear() { for (int i = 0; i < count; i++) { buffer[i] = null; } count = 0; }
public virtual int IndexOf(object o) { for (int i = 0; i < size; i++) { if (o.Equals(elements[i])) { return i; } } return -1; }
public virtual string GetName() { return name; }
public virtual void SetValue(int value) { this.value = value; }
public virtual long Sum(int[] values) { long total = 0; foreach (int v in values) { total += v; } return total; }
public virtual object Get(string key) { try { return map[key]; } catch (KeyNotFoundException) { return null; } }
public virtual int CompareTo(Version other) { if (major != other.major) { return major - other.major; } return minor - other.minor; }
